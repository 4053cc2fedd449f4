"""Monte-Carlo error of the perception pipelines and noise calibration sweeps.

A sweep picks the simulated sensor noise so that a pipeline reproduces a target
mean error. Both pipelines have two noise knobs and two error targets; the knobs
are solved for in turn with ``scipy.optimize.brentq`` until they settle. Every
evaluation reuses the same frames and the same noise draws (common random
numbers), so the mean error is a deterministic function of the noise levels.

Camera frames are scored on the filtered pose after a short static track, LiDAR
frames on the single-scan estimate.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from trollector.geometry import Pose2, wrap_angle
from trollector.sim.world import World
from trollector.sim.sensors import SensorBundle, sense_camera, sense_lidar
from trollector.perception.filters import FilteredTarget, GateParams, update_target
from trollector.progress import progress_bar
from trollector.utils import get_logger


logger = get_logger("Calibration")

CAMERA_TARGETS = (0.17, 0.11)
LIDAR_TARGETS = (0.03, 0.02)

# ticks a camera frame is observed for before its filtered pose is scored
CAMERA_TRACK = 10


@dataclass(frozen=True)
class FrameSpec:
    distance: tuple
    bearing: float
    yaw: float


CAMERA_FRAMES = FrameSpec(distance=(1.5, 4.0), bearing=np.deg2rad(30.0), yaw=np.deg2rad(30.0))
LIDAR_FRAMES = FrameSpec(distance=(0.5, 2.0), bearing=np.deg2rad(20.0), yaw=np.deg2rad(20.0))


@dataclass
class ErrorStats:
    position: np.ndarray
    angle: np.ndarray
    failures: int

    @property
    def mean_position(self):
        return float(np.mean(self.position)) if len(self.position) else float("inf")

    @property
    def mean_angle(self):
        return float(np.mean(self.angle)) if len(self.angle) else float("inf")

    def to_json(self):
        return {
            "mean_position": self.mean_position,
            "var_position": float(np.var(self.position)) if len(self.position) else None,
            "mean_angle": self.mean_angle,
            "frames": len(self.position),
            "failures": self.failures,
        }


def random_frames(n_frames, spec, mount_offset, seed=0):
    """Independent trial worlds: the robot at the origin, the trolley at a random range, bearing and yaw.

    Bearing is measured from the sensor; a zero yaw turns the backplane straight
    toward the sensor. Frame ``i`` uses tick ``i``, so each frame owns its noise stream.
    """
    rng = np.random.default_rng(seed)
    sensor = Pose2().compose(mount_offset)
    frames = []
    for idx in range(n_frames):
        dist = rng.uniform(*spec.distance)
        bearing = rng.uniform(-spec.bearing, spec.bearing)
        yaw = rng.uniform(-spec.yaw, spec.yaw)
        local = Pose2(dist * np.cos(bearing), dist * np.sin(bearing), bearing + yaw)
        frames.append(World(robot=Pose2(), trolley=sensor.compose(local), seed=seed, tick=idx))
    return frames


def _errors(estimates, frames):
    pos, ang, failures = [], [], 0
    for est, world in zip(estimates, frames):
        if est is None:
            failures += 1
            continue
        pos.append(est.distance_to(world.trolley))
        ang.append(abs(wrap_angle(est.theta - world.trolley.theta)))
    return ErrorStats(np.array(pos), np.array(ang), failures)


def _filtered_track(world, measure, gate, track):
    """Filtered estimate after ``track`` ticks of a static scene; every tick draws fresh noise."""
    state = FilteredTarget()
    for step in range(track):
        now = step * world.dt
        tick = replace(world, tick=world.tick * track + step, time=now)
        state = update_target(state, measure(tick), now, gate)
    return state.pose


def camera_errors(frames, estimator, noise_back_px, noise_front_px, gate=GateParams(), track=CAMERA_TRACK):
    """Error of the full camera pipeline over independent frames.

    Each frame is observed for ``track`` ticks; every tick runs EPnP and the
    reprojection refinement, and the estimates pass through the gate-then-blend
    target filter. The error is that of the filtered pose after the last tick.
    """
    def measure(world):
        kps = sense_camera(world, estimator.rig, noise_back_px, noise_front_px)
        if kps is None:
            return None
        return estimator.estimate(SensorBundle(time=world.time, robot_pose=world.robot, keypoints=kps))

    return _errors([_filtered_track(world, measure, gate, track) for world in frames], frames)


def lidar_errors(frames, estimator, jitter_translation, jitter_yaw, range_noise=0.0, clutter=0):
    """Pipeline error of crop + RANSAC + plane pose over independent frames."""
    estimates = []
    for world in frames:
        cloud = sense_lidar(world, estimator.rig, range_noise, clutter=clutter,
                            jitter=(jitter_translation, jitter_yaw))
        sensors = SensorBundle(time=world.time, robot_pose=world.robot, cloud=cloud)
        estimates.append(estimator.estimate(sensors) if cloud is not None else None)
    return _errors(estimates, frames)


def _solve_knob(func, bracket, label):
    low, high = bracket
    f_low, f_high = func(low), func(high)
    if f_low > 0:
        logger.warning("%s: the target is below the error at %.4g, using the lower bracket end", label, low)
        return low
    if f_high < 0:
        logger.warning("%s: the target is above the error at %.4g, using the upper bracket end", label, high)
        return high
    return brentq(func, low, high, xtol=1e-4)


@dataclass(frozen=True)
class CalibrationResult:
    knobs: dict
    stats: ErrorStats
    rounds: int

    def to_json(self):
        return {"knobs": self.knobs, "errors": self.stats.to_json(), "rounds": self.rounds}


def calibrate_camera(frames, estimator, targets=CAMERA_TARGETS, initial=(10.5, 25.0), bracket=(0.05, 80.0),
                     rounds=3, tol=1e-3, gate=GateParams(), track=CAMERA_TRACK):
    """Back-keypoint sigma for the position target, front-keypoint sigma for the angle target.

    The errors are those of the filtered camera pipeline, see :func:`camera_errors`.
    """
    def errors(back_px, front_px):
        return camera_errors(frames, estimator, back_px, front_px, gate=gate, track=track)

    back, front = initial
    bar = progress_bar(range(rounds), total=rounds, desc="Camera sweep")
    used = 0
    for used in bar:
        prev = (back, front)
        back = _solve_knob(
            lambda sig: errors(sig, front).mean_position - targets[0], bracket, "Back sigma"
        )
        front = _solve_knob(
            lambda sig: errors(back, sig).mean_angle - targets[1], bracket, "Front sigma"
        )
        logger.info("Camera round %d: back %.4f px, front %.4f px", used + 1, back, front)
        if max(abs(back - prev[0]), abs(front - prev[1])) < tol:
            break
    stats = errors(back, front)
    return CalibrationResult({"noise_back_px": back, "noise_front_px": front}, stats, used + 1)


def calibrate_lidar(frames, estimator, targets=LIDAR_TARGETS, initial=(0.02, 0.02), bracket_t=(0.0, 0.1),
                    bracket_yaw=(0.0, 0.1), range_noise=0.0, clutter=0, rounds=3, tol=1e-5):
    """Yaw jitter for the angle target, translation jitter for the position target."""
    sig_t, sig_yaw = initial
    bar = progress_bar(range(rounds), total=rounds, desc="LiDAR sweep")
    used = 0
    for used in bar:
        prev = (sig_t, sig_yaw)
        sig_yaw = _solve_knob(
            lambda sig: lidar_errors(frames, estimator, sig_t, sig, range_noise, clutter).mean_angle - targets[1],
            bracket_yaw, "Yaw jitter"
        )
        sig_t = _solve_knob(
            lambda sig: lidar_errors(frames, estimator, sig, sig_yaw, range_noise, clutter).mean_position - targets[0],
            bracket_t, "Translation jitter"
        )
        logger.info("LiDAR round %d: translation %.5f m, yaw %.5f rad", used + 1, sig_t, sig_yaw)
        if max(abs(sig_t - prev[0]), abs(sig_yaw - prev[1])) < tol:
            break
    stats = lidar_errors(frames, estimator, sig_t, sig_yaw, range_noise, clutter)
    return CalibrationResult({"jitter_translation": sig_t, "jitter_yaw": sig_yaw}, stats, used + 1)


def fresh_frames(frames, seed):
    """Same geometry, new noise streams."""
    return [replace(world, seed=seed) for world in frames]
