"""Trolley collection mission: approach, dock, capture and return.

Every tick :func:`step_mission` consumes one :class:`SensorBundle` and returns the
next :class:`MissionState` and the :class:`Command` to execute.

* **Approach**: the camera pipeline tracks the trolley and the NMPC drives to a
  pose ``approach_standoff`` behind it, avoiding obstacles and the trolley body.
  The robot rotates in place until the trolley is seen for the first time.
* **Dock**: the LiDAR pipeline takes over and the docking NMPC, which also keeps
  the trolley in view, drives to the docking pose. Losing the trolley (a gated
  measurement, or more than ``dock_exit_distance`` away) falls back to Approach.
* **Capture**: the robot stands still while the fork lifts. A blocked fork is
  lowered and lifted once more; a second block aborts the mission.
* **Return**: the NMPC drives to the return spot with the trolley on the fork.
"""
from enum import Enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from trollector.geometry import Pose2
from trollector.exceptions import InfeasibleStart, TargetCoincident
from trollector.perception.camera import CameraPoseEstimator
from trollector.perception.lidar import LidarPoseEstimator
from trollector.perception.filters import GateParams, FilteredTarget, update_target
from trollector.perception.plane import docking_pose_from_trolley
from trollector.planner.model import RobotModel
from trollector.planner.barriers import Obstacle, BarrierSpec, h_obstacle, h_view, inflated_safe_distance
from trollector.planner.nlp import SqpOptions
from trollector.planner.nmpc import NmpcProblem, RecedingHorizonPlanner
from trollector.mission.manipulator import (
    Mode, ForkCommand, ManipulatorParams, ManipulatorState, manipulator_update
)
from trollector.utils import get_logger


logger = get_logger("Mission")


class Stage(Enum):
    APPROACH = "Approach"
    DOCK = "Dock"
    CAPTURE = "Capture"
    RETURN = "Return"
    DONE = "Done"
    ABORTED = "Aborted"


STAGE_ORDER = [Stage.APPROACH, Stage.DOCK, Stage.CAPTURE, Stage.RETURN, Stage.DONE]
MAX_BLOCKED = 2


@dataclass(frozen=True)
class Command:
    v: float = 0.0
    w: float = 0.0
    fork: str = ForkCommand.HOLD.value

    @property
    def control(self):
        return self.v, self.w


@dataclass(frozen=True, eq=False)
class StepInfo:
    """Diagnostics of one mission tick, consumed by the run logger."""
    stage: Stage
    transition: Optional[str] = None
    measurement: Optional[Pose2] = None
    problem: Optional[NmpcProblem] = None
    solution: object = None
    h_view: Optional[float] = None


@dataclass(frozen=True, eq=False)
class MissionParams:
    planner: RecedingHorizonPlanner
    camera: CameraPoseEstimator
    lidar: LidarPoseEstimator
    gate: GateParams = GateParams()
    horizon: int = 20
    terminal_weight: np.ndarray = field(default_factory=lambda: np.diag([10.0, 10.0, 2.0]))
    control_weight: np.ndarray = field(default_factory=lambda: np.diag([1.0, 0.5]))
    slack_weight: float = 1000.0
    obstacle_decay: float = 0.3
    view_decay: float = 0.3
    robot_radius: float = 0.3
    margin: float = 0.1
    theta_max: float = 0.6
    trolley_body: tuple = (0.4, 0.45)
    approach_standoff: float = 1.5
    dock_standoff: float = 0.4
    dock_switch_radius: float = 0.15
    dock_band: tuple = (0.3, 2.0)
    dock_exit_distance: float = 2.5
    capture_pos_tol: float = 0.03
    capture_ang_tol: float = 0.05
    capture_settle_ticks: int = 3
    return_tol: float = 0.1
    search_rate: float = 0.4
    tick_budgets: dict = field(default_factory=lambda: {
        Stage.APPROACH: 900, Stage.DOCK: 400, Stage.CAPTURE: 300, Stage.RETURN: 900
    })
    manipulator: ManipulatorParams = ManipulatorParams()
    lift_target: float = 0.35
    return_spot: Pose2 = Pose2(0.0, 0.0, np.pi)

    def __post_init__(self):
        if not self.approach_standoff > self.dock_standoff:
            raise ValueError("The approach standoff must exceed the docking standoff.")

    @classmethod
    def from_settings(cls, settings):
        planner, mission = settings.planner, settings.mission
        options = SqpOptions(max_iter=planner.max_iter, kkt_tol=planner.kkt_tol)
        budgets = dict(zip([Stage.APPROACH, Stage.DOCK, Stage.CAPTURE, Stage.RETURN], mission.tick_budgets))
        return cls(
            planner=RecedingHorizonPlanner(RobotModel.from_settings(settings), options),
            camera=CameraPoseEstimator.from_settings(settings),
            lidar=LidarPoseEstimator.from_settings(settings),
            gate=GateParams.from_settings(settings.perception),
            horizon=planner.horizon,
            terminal_weight=np.diag(planner.terminal_weight),
            control_weight=np.diag(planner.control_weight),
            slack_weight=planner.slack_weight,
            obstacle_decay=planner.obstacle_decay,
            view_decay=planner.view_decay,
            robot_radius=planner.robot_radius,
            margin=planner.margin,
            theta_max=planner.theta_max,
            trolley_body=tuple(settings.world.trolley_body),
            approach_standoff=mission.approach_standoff,
            dock_standoff=mission.dock_standoff,
            dock_switch_radius=mission.dock_switch_radius,
            dock_band=tuple(mission.dock_band),
            dock_exit_distance=mission.dock_exit_distance,
            capture_pos_tol=mission.capture_pos_tol,
            capture_ang_tol=mission.capture_ang_tol,
            capture_settle_ticks=mission.capture_settle_ticks,
            return_tol=mission.return_tol,
            search_rate=mission.search_rate,
            tick_budgets=budgets,
            manipulator=ManipulatorParams.from_settings(mission),
            lift_target=mission.lift_target,
            return_spot=Pose2(*settings.world.return_spot),
        )

    def d_safe(self, obstacle):
        return inflated_safe_distance(self.robot_radius, obstacle.radius, self.margin)


@dataclass(frozen=True, eq=False)
class MissionState:
    stage: Stage = Stage.APPROACH
    target: FilteredTarget = FilteredTarget()
    goal: Optional[Pose2] = None
    tick_count: int = 0
    stage_ticks: int = 0
    blocked_count: int = 0
    settle_ticks: int = 0
    warm_start: Optional[np.ndarray] = None
    manipulator: ManipulatorState = ManipulatorState()
    fork_command: str = ForkCommand.HOLD.value
    abort_reason: Optional[str] = None
    last_step: Optional[StepInfo] = None

    @property
    def finished(self):
        return self.stage in (Stage.DONE, Stage.ABORTED)


def approach_goal(q_tar, standoff_m):
    """Pose ``standoff_m`` behind the trolley, facing the same way as the trolley."""
    return docking_pose_from_trolley(q_tar, standoff_m)


def obstacle_barriers(obstacles, params):
    return [BarrierSpec.for_obstacle(obs, params.d_safe(obs), params.obstacle_decay) for obs in obstacles]


def trolley_body_obstacle(q_tar, params):
    offset, radius = params.trolley_body
    return Obstacle(q_tar.transform_point((offset, 0.0)), radius=radius)


def check_clear(robot, obstacles, params):
    for obs in obstacles:
        value = h_obstacle(robot, obs, params.d_safe(obs))
        if value <= 0:
            raise InfeasibleStart(
                f"Robot at ({robot.x:.2f}, {robot.y:.2f}) is within the safe distance of the obstacle "
                f"at {np.round(obs.center, 2).tolist()} (h={value:.3f})."
            )


def _transition(ms, stage, **changes):
    logger.info("Stage %s -> %s at tick %d", ms.stage.value, stage.value, ms.tick_count)
    changes.setdefault("warm_start", None)
    return replace(ms, stage=stage, stage_ticks=0, settle_ticks=0, **changes), f"{ms.stage.value} -> {stage.value}"


def _abort(ms, reason):
    logger.warning("Mission aborted at tick %d: %s", ms.tick_count, reason)
    new_ms, transition = _transition(ms, Stage.ABORTED, abort_reason=reason)
    new_ms = replace(new_ms, last_step=StepInfo(stage=Stage.ABORTED, transition=transition))
    return new_ms, Command()


def _plan(ms, params, robot, goal, barriers, docking):
    problem = NmpcProblem(
        horizon=params.horizon,
        x_init=robot,
        x_goal=goal,
        terminal_weight=params.terminal_weight,
        control_weight=params.control_weight,
        barriers=tuple(barriers),
        slack_weight=params.slack_weight if docking else None,
    )
    try:
        solution = params.planner.plan(problem, docking=docking, warm_start=ms.warm_start)
    except TargetCoincident as err:
        logger.warning("Docking plan skipped: %s", err)
        return problem, None, Command(), None
    command = Command(*solution.first_control)
    return problem, solution, command, params.planner.warm_start_from(solution)


def _step_approach(ms, sensors, params):
    robot = sensors.robot_pose
    check_clear(robot, sensors.obstacles, params)
    measurement = params.camera.estimate(sensors)
    target = update_target(ms.target, measurement, sensors.time, params.gate)
    if not target.initialized:
        ms = replace(ms, target=target, goal=None)
        return ms, Command(0.0, params.search_rate), StepInfo(stage=ms.stage, measurement=measurement)

    goal = approach_goal(target.pose, params.approach_standoff)
    trolley_dist = robot.distance_to(target.pose)
    band_low, band_high = params.dock_band
    if robot.distance_to(goal) <= params.dock_switch_radius and band_low <= trolley_dist <= band_high:
        dock_goal = docking_pose_from_trolley(target.pose, params.dock_standoff)
        ms, transition = _transition(ms, Stage.DOCK, target=target, goal=dock_goal)
        return ms, Command(), StepInfo(stage=ms.stage, transition=transition, measurement=measurement)

    barriers = obstacle_barriers(sensors.obstacles, params)
    body = trolley_body_obstacle(target.pose, params)
    if h_obstacle(robot, body, params.d_safe(body)) > 0:
        barriers += obstacle_barriers([body], params)
    problem, solution, command, warm = _plan(ms, params, robot, goal, barriers, docking=False)
    ms = replace(ms, target=target, goal=goal, warm_start=warm)
    return ms, command, StepInfo(stage=ms.stage, measurement=measurement, problem=problem, solution=solution)


def _step_dock(ms, sensors, params):
    robot = sensors.robot_pose
    check_clear(robot, sensors.obstacles, params)
    measurement = params.lidar.estimate(sensors)
    target = update_target(ms.target, measurement, sensors.time, params.gate)
    if target.rejected or robot.distance_to(target.pose) > params.dock_exit_distance:
        logger.warning("Trolley lost while docking (gated: %s)", target.rejected)
        goal = approach_goal(target.pose, params.approach_standoff)
        ms, transition = _transition(ms, Stage.APPROACH, target=target, goal=goal)
        return ms, Command(), StepInfo(stage=ms.stage, transition=transition, measurement=measurement)

    goal = docking_pose_from_trolley(target.pose, params.dock_standoff)
    view = h_view(robot, target.pose.position, params.theta_max)
    if robot.distance_to(goal) < params.capture_pos_tol and robot.heading_error(goal) < params.capture_ang_tol:
        settle = ms.settle_ticks + 1
        if settle >= params.capture_settle_ticks:
            manipulator = ms.manipulator.drive_to(params.lift_target)
            ms, transition = _transition(ms, Stage.CAPTURE, target=target, goal=goal, manipulator=manipulator)
            info = StepInfo(stage=ms.stage, transition=transition, measurement=measurement, h_view=view)
            return ms, Command(fork=ForkCommand.LIFTING.value), info
        ms = replace(ms, target=target, goal=goal, settle_ticks=settle)
        return ms, Command(), StepInfo(stage=ms.stage, measurement=measurement, h_view=view)

    barriers = obstacle_barriers(sensors.obstacles, params)
    barriers.append(BarrierSpec.for_view(target.pose.position, params.theta_max, params.view_decay))
    problem, solution, command, warm = _plan(ms, params, robot, goal, barriers, docking=True)
    ms = replace(ms, target=target, goal=goal, warm_start=warm, settle_ticks=0)
    info = StepInfo(stage=ms.stage, measurement=measurement, problem=problem, solution=solution, h_view=view)
    return ms, command, info


def _step_capture(ms, sensors, params):  # pylint: disable=W0613
    manipulator = ms.manipulator
    if manipulator.mode == Mode.GRASPED:
        ms, transition = _transition(ms, Stage.RETURN, goal=params.return_spot)
        return ms, Command(), StepInfo(stage=ms.stage, transition=transition)

    if manipulator.mode == Mode.BLOCKED:
        blocked = ms.blocked_count + 1
        if blocked >= MAX_BLOCKED:
            raise _Abort(f"Blocked: the fork was blocked {blocked} times")
        logger.warning("Fork blocked at l=%.3f m, lowering for a retry", manipulator.l)
        manipulator = manipulator.drive_to(0.0)
        ms = replace(ms, blocked_count=blocked)
    elif manipulator.mode == Mode.AT_POSITION:
        if manipulator.target == 0.0:
            manipulator = manipulator.drive_to(params.lift_target)
        else:
            raise _Abort(f"NoGrasp: the fork reached {manipulator.l:.3f} m without engaging the trolley")

    fork = ForkCommand.LIFTING if manipulator.mode == Mode.LIFTING else ForkCommand.LOWERING
    ms = replace(ms, manipulator=manipulator)
    return ms, Command(fork=fork.value), StepInfo(stage=ms.stage)


def _step_return(ms, sensors, params):
    robot = sensors.robot_pose
    goal = params.return_spot
    if robot.distance_to(goal) <= params.return_tol:
        ms, transition = _transition(ms, Stage.DONE, goal=goal)
        return ms, Command(), StepInfo(stage=ms.stage, transition=transition)

    check_clear(robot, sensors.obstacles, params)
    barriers = obstacle_barriers(sensors.obstacles, params)
    problem, solution, command, warm = _plan(ms, params, robot, goal, barriers, docking=False)
    ms = replace(ms, goal=goal, warm_start=warm)
    return ms, command, StepInfo(stage=ms.stage, problem=problem, solution=solution)


class _Abort(Exception):
    pass


STAGE_HANDLERS = {
    Stage.APPROACH: _step_approach,
    Stage.DOCK: _step_dock,
    Stage.CAPTURE: _step_capture,
    Stage.RETURN: _step_return,
}


def step_mission(ms, sensors, params):
    """Advance the mission by one tick.

    Parameters
    ----------
    ms: MissionState
        State after the previous tick.
    sensors: SensorBundle
        Readings of this tick.
    params: MissionParams

    Returns
    -------
    (MissionState, Command)
        The diagnostics of the tick are attached as ``MissionState.last_step``.
        Exceeding a stage's tick budget, a robot inside an obstacle's safe
        distance and a second fork block all end in ``Aborted``.
    """
    if ms.finished:
        return replace(ms, last_step=StepInfo(stage=ms.stage)), Command()

    manipulator = manipulator_update(ms.manipulator, ms.fork_command, sensors.fork_length, params.manipulator)
    ms = replace(ms, tick_count=ms.tick_count + 1, manipulator=manipulator)
    budget = params.tick_budgets[ms.stage]
    if ms.stage_ticks >= budget:
        return _abort(ms, f"TickBudget: stage {ms.stage.value} used its {budget} ticks")

    try:
        new_ms, command, info = STAGE_HANDLERS[ms.stage](ms, sensors, params)
    except InfeasibleStart as err:
        return _abort(ms, f"InfeasibleStart: {err}")
    except _Abort as err:
        return _abort(ms, str(err))

    if info.transition is None:
        new_ms = replace(new_ms, stage_ticks=new_ms.stage_ticks + 1)
    new_ms = replace(new_ms, fork_command=command.fork, last_step=info)
    return new_ms, command
