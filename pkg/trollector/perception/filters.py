"""Gate-then-blend filter of the trolley pose with field-of-view hold-last."""
from dataclasses import dataclass, replace
from typing import Optional

from trollector.geometry import Pose2, wrap_angle
from trollector.utils import get_logger


logger = get_logger("Target Filter")


@dataclass(frozen=True)
class GateParams:
    alpha: float = 0.3
    max_jump_m: float = 0.5
    max_jump_rad: float = 0.5
    reacquire_after: int = 10

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"Blend factor must be in (0, 1], received {self.alpha}")

    @classmethod
    def from_settings(cls, perception):
        return cls(
            alpha=perception.alpha,
            max_jump_m=perception.max_jump_m,
            max_jump_rad=perception.max_jump_rad,
            reacquire_after=perception.reacquire_after,
        )


@dataclass(frozen=True)
class FilteredTarget:
    """Filtered trolley pose.

    ``pose`` is None until the first measurement arrives, and is the most recent
    accepted estimate afterwards.
    """
    pose: Optional[Pose2] = None
    last_update_time: float = float("-inf")
    in_fov: bool = False
    rejected: bool = False
    consecutive_rejections: int = 0

    @property
    def initialized(self):
        return self.pose is not None


def blend_pose(previous, measurement, alpha):
    """Exponential blend, angles blended along the shorter arc."""
    return Pose2(
        previous.x + alpha * (measurement.x - previous.x),
        previous.y + alpha * (measurement.y - previous.y),
        previous.theta + alpha * wrap_angle(measurement.theta - previous.theta),
    )


def update_target(state, measurement, now, gate=GateParams()):
    """Fold one (possibly absent) measurement into the filtered target.

    Parameters
    ----------
    state: FilteredTarget
        Filter state of the previous tick.
    measurement: Pose2 or None
        None when the trolley is out of the field of view.
    now: float
        Current time in seconds.
    gate: GateParams
        Blend factor and jump gates.

    Returns
    -------
    FilteredTarget
    """
    if measurement is None:
        return replace(state, in_fov=False, rejected=False)

    if state.pose is None:
        logger.debug("Target initialised at (%.2f, %.2f, %.2f)", measurement.x, measurement.y, measurement.theta)
        return FilteredTarget(pose=measurement, last_update_time=now, in_fov=True)

    jump_m = state.pose.distance_to(measurement)
    jump_rad = abs(wrap_angle(measurement.theta - state.pose.theta))
    if jump_m > gate.max_jump_m or jump_rad > gate.max_jump_rad:
        count = state.consecutive_rejections + 1
        if count > gate.reacquire_after:
            logger.warning("Target re-acquired after %d rejected measurements", state.consecutive_rejections)
            return FilteredTarget(pose=measurement, last_update_time=now, in_fov=True)
        logger.debug("Measurement gated out: jump %.3f m / %.3f rad", jump_m, jump_rad)
        return replace(state, in_fov=True, rejected=True, consecutive_rejections=count)

    return FilteredTarget(
        pose=blend_pose(state.pose, measurement, gate.alpha),
        last_update_time=now,
        in_fov=True,
    )
