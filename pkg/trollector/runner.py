"""Closed-loop scenario runner, run artifacts and batch runs.

A run writes three files into its output directory:

* ``trajectory.csv``: one row per tick, columns ``TRAJECTORY_COLUMNS``.
* ``ticks.jsonl``: one JSON object per tick with the sensor summary, the obstacle
  tracks with their safety distances and the planned trajectory.
* ``metrics.json``: outcome and summary statistics of the run.

With ``Run/DumpSensors`` set, ``sensors/`` additionally holds ``cloud_<tick>.xyz`` with the
LiDAR points and ``keypoints_<tick>.xyz`` with the camera keypoints as homogeneous pixel
coordinates ``u v 1``, for every tick that has the reading.

Runs are deterministic: the same settings and seed give a byte-identical CSV.
"""
import os
from dataclasses import dataclass, field

import numpy as np

from trollector.io import write_csv, write_json, write_jsonl, write_xyz, write_yaml
from trollector.constants.frames import TRAJECTORY_COLUMNS
from trollector.setting_loaders import ScenarioSettings, load_scenario_document
from trollector.sim.world import World, tick
from trollector.sim.sensors import SensorSuite
from trollector.mission.app import MissionParams, MissionState, Stage, step_mission
from trollector.perception.plane import docking_pose_from_trolley
from trollector.planner.barriers import h_obstacle
from trollector.planner.nmpc import solution_to_json
from trollector.verify import verify_run
from trollector.progress import progress_bar, gen_bar_postfix
from trollector.utils import get_logger, parallel_generator, ensure_path_exists, merge_settings


logger = get_logger("Runner")

EXIT_DONE = 0
EXIT_CONFIG_ERROR = 1
EXIT_ABORTED = 2
EXIT_VERIFY_FAILED = 3


@dataclass
class RunResult:
    outcome: str
    metrics: dict
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)
    out_dir: str = None

    @property
    def exit_code(self):
        return EXIT_DONE if self.outcome == Stage.DONE.value else EXIT_ABORTED


def _fmt(value, digits=6):
    if value is None:
        return ""
    return f"{value:.{digits}f}"


def min_barrier(robot, obstacles, params):
    """Smallest obstacle barrier value at the robot pose, None without obstacles."""
    if not obstacles:
        return None
    return min(h_obstacle(robot, obs, params.d_safe(obs)) for obs in obstacles)


def _trajectory_row(world, command, ms, min_h):
    info = ms.last_step
    solution = info.solution if info is not None else None
    slack = solution.slack_max if solution is not None and info.problem.view_barriers else None
    return {
        "t": _fmt(world.time, 3),
        "x": _fmt(world.robot.x),
        "y": _fmt(world.robot.y),
        "theta": _fmt(world.robot.theta),
        "v_cmd": _fmt(command.v),
        "w_cmd": _fmt(command.w),
        "stage": ms.stage.value,
        "min_h_ob": _fmt(min_h),
        "h_view": _fmt(info.h_view if info is not None else None),
        "slack_max": _fmt(slack),
    }


def _tick_record(world, sensors, command, ms, params):
    info = ms.last_step
    record = {
        "tick": world.tick,
        "time": world.time,
        "stage": ms.stage.value,
        "transition": info.transition if info is not None else None,
        "robot": world.robot.as_array(),
        "trolley": world.trolley.as_array(),
        "command": {"v": command.v, "w": command.w, "fork": command.fork},
        "sensors": sensors.summary(),
        "obstacles": [dict(obs.to_json(), d_safe=params.d_safe(obs)) for obs in world.obstacle_tracks()],
        "measurement": None if info is None or info.measurement is None else info.measurement.as_array(),
        "manipulator": {"l": ms.manipulator.l, "mode": ms.manipulator.mode.value},
        "plan": None,
    }
    if info is not None and info.solution is not None:
        record["plan"] = solution_to_json(info.solution, info.problem, params.planner.model.dt)
    return record


def _crossing_stats(rows, window):
    start, end = window
    times = np.array([float(row["t"]) for row in rows])
    speeds = np.abs(np.array([float(row["v_cmd"]) for row in rows]))
    inside = (times >= start) & (times <= end)
    before = times < start
    return {
        "window": [start, end],
        "mean_speed_in": float(np.mean(speeds[inside])) if np.any(inside) else None,
        "min_speed_in": float(np.min(speeds[inside])) if np.any(inside) else None,
        "mean_speed_before": float(np.mean(speeds[before])) if np.any(before) else None,
    }


def compute_metrics(rows, records, ms, settings, dock_error):
    min_values = [float(row["min_h_ob"]) for row in rows if row["min_h_ob"] != ""]
    solve_times = [rec["plan"]["solve_time"] for rec in records if rec["plan"] is not None]
    statuses = [rec["plan"]["status"] for rec in records if rec["plan"] is not None]
    captured = any(rec["transition"] == "Capture -> Return" for rec in records)
    return {
        "outcome": ms.stage.value if ms.finished else "TickLimit",
        "abort_reason": ms.abort_reason,
        "ticks": len(rows),
        "duration": float(rows[-1]["t"]) if rows else 0.0,
        "capture_success": captured,
        "final_docking_error": dock_error,
        "min_h_ob": min(min_values) if min_values else None,
        "executed_violations": sum(value < -1e-6 for value in min_values),
        "crossing": _crossing_stats(rows, settings.run.crossing_window),
        "solver": {
            "solves": len(solve_times),
            "mean_solve_time": float(np.mean(solve_times)) if solve_times else None,
            "max_solve_time": float(np.max(solve_times)) if solve_times else None,
            "not_optimal": sum(status != "optimal" for status in statuses),
        },
    }


def dump_sensors(sensors, tick_index, out_dir):
    """Write the raw readings of one tick under ``out_dir/sensors``; returns the written paths."""
    paths = []
    sensor_dir = os.path.join(out_dir, "sensors")
    if sensors.cloud is not None:
        paths.append(os.path.join(sensor_dir, f"cloud_{tick_index:05d}.xyz"))
        write_xyz(sensors.cloud.points, paths[-1])
    if sensors.keypoints is not None:
        pixels = sensors.keypoints.image_points
        paths.append(os.path.join(sensor_dir, f"keypoints_{tick_index:05d}.xyz"))
        write_xyz(np.hstack([pixels, np.ones((len(pixels), 1))]), paths[-1])
    return paths


def _docking_error(world, params):
    dock = docking_pose_from_trolley(world.trolley, params.dock_standoff)
    return {"position": world.robot.distance_to(dock), "heading": world.robot.heading_error(dock)}


def run_mission(settings, out_dir=None, seed=None, ticks_max=None, verify=False):
    """Run one closed-loop mission in the simulator.

    Parameters
    ----------
    settings: ScenarioSettings
    out_dir: Path, optional
        Where the run artifacts are written. Nothing is written when None.
    seed: int, optional
        Overrides the scenario seed.
    ticks_max: int, optional
        Overrides the tick limit of the scenario.
    verify: bool
        Re-check all barrier constraints from the written logs; the outcome of the
        check is added to the metrics.

    Returns
    -------
    RunResult
    """
    world = World.from_settings(settings, seed=seed)
    suite = SensorSuite.from_settings(settings)
    params = MissionParams.from_settings(settings)
    ticks_max = settings.run.ticks_max if ticks_max is None else ticks_max
    dump = out_dir is not None and settings.run.dump_sensors
    logger.info("Running scenario %s with seed %d", settings.source or "<defaults>", world.seed)

    ms = MissionState()
    rows, records = [], []
    dock_error = None
    for _ in range(ticks_max):
        sensors = suite.sense(world)
        if dump:
            dump_sensors(sensors, world.tick, out_dir)
        ms, command = step_mission(ms, sensors, params)
        if ms.last_step.transition == "Dock -> Capture":
            dock_error = _docking_error(world, params)
        rows.append(_trajectory_row(world, command, ms, min_barrier(world.robot, world.obstacle_tracks(), params)))
        records.append(_tick_record(world, sensors, command, ms, params))
        if ms.finished:
            break
        world = tick(world, command.control, command.fork)

    metrics = compute_metrics(rows, records, ms, settings, dock_error)
    result = RunResult(metrics["outcome"], metrics, rows, records, out_dir)
    logger.info("Run finished: %s after %d ticks", result.outcome, len(rows))
    if ms.abort_reason is not None:
        logger.warning("Abort reason: %s", ms.abort_reason)
    if out_dir is not None:
        write_run(result)
        if verify:
            report = verify_run(out_dir)
            metrics["verify"] = report.to_json()
            write_json(metrics, os.path.join(out_dir, "metrics.json"))
    return result


def write_run(result):
    out_dir = result.out_dir
    ensure_path_exists(out_dir)
    write_csv(result.rows, os.path.join(out_dir, "trajectory.csv"), TRAJECTORY_COLUMNS)
    write_jsonl(result.records, os.path.join(out_dir, "ticks.jsonl"))
    write_json(result.metrics, os.path.join(out_dir, "metrics.json"))


def _setting(section, key, value):
    return {"General": {section: {"Settings": {key: {"Value": value}}}}}


def random_scenario(seed, n_obstacles=None):
    """Override document of a randomised mission with 3 to 8 static obstacles.

    Obstacles are kept clear of the start, the approach and docking poses and the
    trolley, and apart from each other.
    """
    rng = np.random.default_rng(seed)
    n_obstacles = int(rng.integers(3, 9)) if n_obstacles is None else n_obstacles
    trolley = [float(rng.uniform(5.0, 8.0)), float(rng.uniform(-1.5, 1.5)), float(rng.uniform(-0.4, 0.4))]
    keep_clear = [
        np.zeros(2),
        np.array(trolley[:2]),
        np.array(trolley[:2]) - 1.5 * np.array([np.cos(trolley[2]), np.sin(trolley[2])]),
    ]
    obstacles = []
    for _ in range(200 * n_obstacles):
        if len(obstacles) == n_obstacles:
            break
        center = np.array([rng.uniform(1.0, trolley[0] + 2.0), rng.uniform(-3.5, 3.5)])
        radius = float(rng.uniform(0.15, 0.4))
        if any(np.linalg.norm(center - point) < radius + 1.4 for point in keep_clear):
            continue
        if any(np.linalg.norm(center - np.array(obs["Center"])) < radius + obs["Radius"] + 1.2 for obs in obstacles):
            continue
        obstacles.append({"Center": center.round(3).tolist(), "Radius": round(radius, 3)})

    doc = _setting("World", "Trolley", trolley)
    doc = merge_settings(doc, _setting("World", "Obstacles", obstacles))
    doc = merge_settings(doc, _setting("World", "ReturnSpot", [0.0, 0.0, float(np.pi)]))
    return merge_settings(doc, _setting("Run", "Seed", int(seed)))


def _batch_job(job):
    scenario_path, out_dir = job
    settings = ScenarioSettings(scenario_path)
    result = run_mission(settings, out_dir=out_dir, verify=True)
    return {
        "scenario": scenario_path,
        "outcome": result.outcome,
        "abort_reason": result.metrics["abort_reason"],
        "verified": result.metrics["verify"]["ok"],
        "min_h_ob": result.metrics["min_h_ob"],
        "ticks": result.metrics["ticks"],
    }


def run_batch(n_runs, out_dir, seed=0, max_workers=2, base_scenario=None):
    """Run ``n_runs`` randomised missions in parallel, one world per worker.

    Every run gets its own sub-directory with the generated ``scenario.yaml`` and the
    usual artifacts; ``summary.json`` collects the outcomes.
    """
    jobs = []
    for idx in range(n_runs):
        run_dir = os.path.join(out_dir, f"run_{idx:03d}")
        doc = random_scenario(seed + idx)
        if base_scenario is not None:
            doc = merge_settings(load_scenario_document(base_scenario), doc)
        scenario_path = os.path.join(run_dir, "scenario.yaml")
        write_yaml(doc, scenario_path)
        jobs.append((scenario_path, run_dir))

    results = [None] * n_runs
    status = {"done": 0, "aborted": 0, "violations": 0}
    bar = progress_bar(parallel_generator(_batch_job, jobs, max_workers=max_workers), total=n_runs, desc="Batch")
    for summary, idx in bar:
        results[idx] = summary
        status["done" if summary["outcome"] == Stage.DONE.value else "aborted"] += 1
        status["violations"] += int(not summary["verified"])
        bar.set_postfix_str(gen_bar_postfix(status))

    summary = {"runs": results, **status}
    write_json(summary, os.path.join(out_dir, "summary.json"))
    return summary

