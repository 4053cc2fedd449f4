"""Fork manipulator feedback from the draw-wire encoder.

The encoder reports the wire length ``l`` every tick. Its difference ``delta_l``
tells whether the fork is still moving: a commanded fork that stops short of its
target has either grasped the trolley (stopped inside the grasp band) or hit
something (stopped anywhere else).
"""
from enum import Enum
from dataclasses import dataclass, replace
from typing import Optional

from trollector.utils import get_logger


logger = get_logger("Manipulator")


class Mode(Enum):
    IDLE = "Idle"
    LIFTING = "Lifting"
    LOWERING = "Lowering"
    AT_POSITION = "AtPosition"
    BLOCKED = "Blocked"
    GRASPED = "Grasped"


class ForkCommand(Enum):
    LIFTING = "Lifting"
    LOWERING = "Lowering"
    HOLD = "Hold"


@dataclass(frozen=True)
class ManipulatorParams:
    eps_pos: float = 0.002
    eps_stall: float = 0.0005
    stall_ticks: int = 5
    grasp_band: tuple = (0.18, 0.22)

    @classmethod
    def from_settings(cls, mission):
        return cls(
            eps_pos=mission.eps_pos,
            eps_stall=mission.eps_stall,
            stall_ticks=mission.stall_ticks,
            grasp_band=tuple(mission.grasp_band),
        )

    def in_grasp_band(self, length):
        return self.grasp_band[0] <= length <= self.grasp_band[1]


@dataclass(frozen=True)
class ManipulatorState:
    """Fork state as seen through the encoder.

    ``target`` is the wire length the fork is being driven to; None while idle.
    """
    l: float = 0.0
    delta_l: float = 0.0
    mode: Mode = Mode.IDLE
    stall_count: int = 0
    target: Optional[float] = None

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"Wire length must be non-negative, received {self.l}")

    def drive_to(self, target):
        """Start a new fork motion toward ``target``; clears the stall history."""
        mode = Mode.LIFTING if target > self.l else Mode.LOWERING
        return replace(self, target=float(target), mode=mode, stall_count=0)


def _moving_mode(commanded):
    return Mode.LIFTING if commanded == ForkCommand.LIFTING else Mode.LOWERING


def manipulator_update(m, commanded, measured_l, params=ManipulatorParams()):
    """Fold one encoder reading into the manipulator state.

    Parameters
    ----------
    m: ManipulatorState
        State of the previous tick.
    commanded: ForkCommand
        What the fork was commanded to do during the last tick.
    measured_l: float
        Current wire length from the encoder, in meters.
    params: ManipulatorParams

    Returns
    -------
    ManipulatorState
        ``AtPosition`` once the length is within ``eps_pos`` of the target. While
        the fork is commanded to move, a stall of ``stall_ticks`` consecutive ticks
        gives ``Grasped`` inside the grasp band and ``Blocked`` elsewhere. Holding
        never changes the mode.
    """
    if measured_l < 0:
        raise ValueError(f"Measured wire length must be non-negative, received {measured_l}")
    commanded = ForkCommand(commanded)
    delta_l = measured_l - m.l

    if commanded == ForkCommand.HOLD:
        return replace(m, l=measured_l, delta_l=delta_l, stall_count=0)

    if m.target is not None and abs(measured_l - m.target) < params.eps_pos:
        return replace(m, l=measured_l, delta_l=delta_l, mode=Mode.AT_POSITION, stall_count=0)

    if abs(delta_l) >= params.eps_stall:
        return replace(m, l=measured_l, delta_l=delta_l, mode=_moving_mode(commanded), stall_count=0)

    stall_count = m.stall_count + 1
    if stall_count < params.stall_ticks:
        return replace(m, l=measured_l, delta_l=delta_l, mode=_moving_mode(commanded), stall_count=stall_count)

    if commanded == ForkCommand.LIFTING and params.in_grasp_band(measured_l):
        mode = Mode.GRASPED
    else:
        mode = Mode.BLOCKED
    logger.info("Fork stalled at l=%.3f m for %d ticks: %s", measured_l, stall_count, mode.value)
    return replace(m, l=measured_l, delta_l=delta_l, mode=mode, stall_count=stall_count)
