"""Define classes for loading YAML setting files.

Parse settings into pre-defined classes, similar to the 'view model'
concept in MVVC, and instead of access values key by key.

A scenario file only needs the keys it changes. It is merged over
``defaults/scenario.yaml`` before the merged document is validated.
"""
# pylint: disable=R0903,C0115,R0902
import os
import json

import yaml
import jsonschema

from trollector import SETTING_DIR, SCENARIO_DIR
from trollector.io import load_yaml
from trollector.utils import json_serializable, merge_settings
from trollector.exceptions import ConfigurationError
from trollector.constants.schema.scenario_settings import SCENARIO_SETTINGS_SCHEMA


def resolve_scenario_path(scenario):
    """Accept either a path or the name of a shipped scenario (e.g. ``demo_fig8``)."""
    if scenario is None or os.path.exists(scenario):
        return scenario
    for ext in (".yaml", ".yml", ".json"):
        candidate = os.path.join(SCENARIO_DIR, f"{scenario}{ext}")
        if os.path.exists(candidate):
            return candidate
    raise ConfigurationError(f"Scenario not found: {scenario}")


def load_scenario_document(path):
    """Read a YAML or JSON scenario file, reporting parser errors with line and column."""
    with open(path, "r") as conf_file:
        text = conf_file.read()

    if path.endswith(".json"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    else:
        try:
            doc = yaml.load(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as err:
            mark = getattr(err, "problem_mark", None)
            if mark is None:
                raise ConfigurationError(f"{path}: {err}") from err
            problem = getattr(err, "problem", None) or str(err)
            raise ConfigurationError(f"{path}:{mark.line + 1}:{mark.column + 1}: {problem}") from err

    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}:1:1: the top level of a scenario must be a mapping")
    return doc


class Settings:
    default_setting_file = None

    def __init__(self, conf_path=None):
        default_doc = load_yaml(os.path.join(SETTING_DIR, self.default_setting_file))
        if conf_path is not None:
            conf_path = resolve_scenario_path(conf_path)
            default_doc = merge_settings(default_doc, load_scenario_document(conf_path))
        try:
            self.from_json(default_doc)  # pylint: disable=E1101
        except jsonschema.ValidationError as err:
            key_path = "/".join(str(key) for key in err.absolute_path)
            raise ConfigurationError(f"{conf_path or self.default_setting_file}: {key_path}: {err.message}") from err
        self.source = conf_path


@json_serializable(key_path="./General", value_path="./Value")
class ScenarioSettings(Settings):
    """Complete settings of a closed-loop scenario."""
    default_setting_file: str = "scenario.yaml"
    transient = ("source",)

    def __init__(self, conf_path=None):
        self.run = self.Run()
        self.world = self.World()
        self.fork = self.Fork()
        self.camera = self.Camera()
        self.lidar = self.Lidar()
        self.perception = self.Perception()
        self.planner = self.Planner()
        self.mission = self.Mission()

        # As a json-serializable object, if variable 'schema' is set,
        # then the input json object will be validated when parsing
        # settings using the from_json function.
        self.schema = SCENARIO_SETTINGS_SCHEMA

        super().__init__(conf_path=conf_path)

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Run:
        def __init__(self):
            self.seed: int = None
            self.dt: float = None
            self.ticks_max: int = None
            self.crossing_window: list = None
            self.dump_sensors: bool = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class World:
        def __init__(self):
            self.robot_start: list = None
            self.trolley: list = None
            self.return_spot: list = None
            self.obstacles: list = None
            self.movers: list = None
            self.backplane_height: float = None
            self.backplane_size: list = None
            self.trolley_body: list = None
            self.pose_noise: list = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Fork:
        def __init__(self):
            self.speed: float = None
            self.grasp_height: float = None
            self.block_height: float = None
            self.top_height: float = None
            self.grasp_tolerance: list = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Camera:
        def __init__(self):
            self.fx: float = None
            self.fy: float = None
            self.cx: float = None
            self.cy: float = None
            self.image_size: list = None
            self.mount_offset: list = None
            self.mount_height: float = None
            self.keypoint_template: list = None
            self.noise_back_px: float = None
            self.noise_front_px: float = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Lidar:
        def __init__(self):
            self.mount_offset: list = None
            self.mount_height: float = None
            self.fov: list = None
            self.max_range: float = None
            self.density: int = None
            self.range_noise: float = None
            self.clutter: int = None
            self.jitter_translation: float = None
            self.jitter_yaw: float = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Perception:
        def __init__(self):
            self.alpha: float = None
            self.max_jump_m: float = None
            self.max_jump_rad: float = None
            self.reacquire_after: int = None
            self.refine_max_iters: int = None
            self.refine_tol: float = None
            self.crop_min: list = None
            self.crop_max: list = None
            self.ransac_iterations: int = None
            self.inlier_tol: float = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Planner:
        def __init__(self):
            self.horizon: int = None
            self.terminal_weight: list = None
            self.control_weight: list = None
            self.slack_weight: float = None
            self.obstacle_decay: float = None
            self.view_decay: float = None
            self.v_bounds: list = None
            self.w_bounds: list = None
            self.workspace: list = None
            self.robot_radius: float = None
            self.margin: float = None
            self.theta_max: float = None
            self.max_iter: int = None
            self.kkt_tol: float = None

    @json_serializable(key_path="./Settings", value_path="./Value")
    class Mission:
        def __init__(self):
            self.approach_standoff: float = None
            self.dock_standoff: float = None
            self.dock_switch_radius: float = None
            self.dock_band: list = None
            self.dock_exit_distance: float = None
            self.capture_pos_tol: float = None
            self.capture_ang_tol: float = None
            self.capture_settle_ticks: int = None
            self.return_tol: float = None
            self.search_rate: float = None
            self.tick_budgets: list = None
            self.eps_pos: float = None
            self.eps_stall: float = None
            self.stall_ticks: int = None
            self.grasp_band: list = None
            self.lift_target: float = None


