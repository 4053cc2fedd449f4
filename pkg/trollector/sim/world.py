"""Deterministic kinematic world.

A :class:`World` is an immutable value. :func:`tick` returns the next value; the
robot follows the same forward-Euler model the planner predicts with, movers are
analytic functions of time and the fork rises or falls at a constant rate.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from trollector.geometry import Pose2
from trollector.planner.model import dd_step
from trollector.planner.barriers import Obstacle
from trollector.perception.plane import docking_pose_from_trolley
from trollector.utils import get_logger


logger = get_logger("Sim World")


@dataclass(frozen=True, eq=False)
class Mover:
    """Obstacle walking along a polyline at constant speed, e.g. a crossing human.

    The mover waits at the first waypoint until ``start_time``. Without ``loop`` it
    stays at the last waypoint once it arrives; with ``loop`` it walks the closed
    polyline forever.
    """
    waypoints: np.ndarray
    speed: float
    radius: float = 0.3
    start_time: float = 0.0
    loop: bool = False

    def __post_init__(self):
        points = np.array(self.waypoints, dtype=float).reshape(-1, 2)
        if len(points) == 0:
            raise ValueError("A mover needs at least one waypoint.")
        if self.speed < 0:
            raise ValueError(f"Mover speed must be non-negative, received {self.speed}")
        if self.loop and len(points) > 1:
            points = np.vstack([points, points[:1]])
        object.__setattr__(self, "waypoints", points)

    @property
    def _segments(self):
        return np.diff(self.waypoints, axis=0)

    @property
    def path_length(self):
        return float(np.sum(np.linalg.norm(self._segments, axis=1)))

    def _arc_length(self, t):
        travelled = max(0.0, t - self.start_time) * self.speed
        total = self.path_length
        if total == 0:
            return 0.0, False
        if self.loop:
            return travelled % total, True
        return min(travelled, total), travelled < total

    def _locate(self, s):
        lengths = np.linalg.norm(self._segments, axis=1)
        for idx, length in enumerate(lengths):
            if s <= length and length > 0:
                return idx, s / length
            s -= length
        return len(lengths) - 1, 1.0

    def position_at(self, t):
        if len(self.waypoints) == 1:
            return self.waypoints[0].copy()
        s, _ = self._arc_length(t)
        idx, frac = self._locate(s)
        return self.waypoints[idx] + frac * self._segments[idx]

    def velocity_at(self, t):
        s, moving = self._arc_length(t)
        if len(self.waypoints) == 1 or not moving or t < self.start_time or self.speed == 0:
            return np.zeros(2)
        idx, _ = self._locate(s)
        seg = self._segments[idx]
        return self.speed * seg / np.linalg.norm(seg)

    @classmethod
    def from_config(cls, obj):
        return cls(
            waypoints=obj["Waypoints"],
            speed=obj["Speed"],
            radius=obj["Radius"],
            start_time=obj.get("StartTime", 0.0),
            loop=obj.get("Loop", False),
        )


@dataclass(frozen=True)
class ForkModel:
    """Simulated fork with a draw-wire encoder.

    The lift stops at ``grasp_height`` when the robot sits at the docking pose within
    ``grasp_tolerance``, at ``block_height`` when it is close to it but misaligned
    (within ``block_reach``), and at ``top_height`` when no trolley is in reach.
    Once the trolley is attached the fork rests at ``grasp_height`` under load.
    """
    speed: float = 0.1
    grasp_height: float = 0.2
    block_height: float = 0.08
    top_height: float = 0.35
    grasp_tolerance: tuple = (0.06, 0.1)
    dock_standoff: float = 0.4
    block_reach: float = 0.5

    @classmethod
    def from_settings(cls, settings):
        fork = settings.fork
        return cls(
            speed=fork.speed,
            grasp_height=fork.grasp_height,
            block_height=fork.block_height,
            top_height=fork.top_height,
            grasp_tolerance=tuple(fork.grasp_tolerance),
            dock_standoff=settings.mission.dock_standoff,
        )

    def alignment(self, robot, trolley):
        """'aligned', 'misaligned' or 'clear' for the current robot and trolley poses."""
        dock = docking_pose_from_trolley(trolley, self.dock_standoff)
        dist = robot.distance_to(dock)
        if dist <= self.grasp_tolerance[0] and robot.heading_error(dock) <= self.grasp_tolerance[1]:
            return "aligned"
        if dist <= self.block_reach:
            return "misaligned"
        return "clear"

    def stop_height(self, robot, trolley):
        return {
            "aligned": self.grasp_height,
            "misaligned": self.block_height,
            "clear": self.top_height,
        }[self.alignment(robot, trolley)]


@dataclass(frozen=True, eq=False)
class World:
    robot: Pose2
    trolley: Pose2
    obstacles: tuple = ()
    movers: tuple = ()
    time: float = 0.0
    tick: int = 0
    seed: int = 0
    dt: float = 0.1
    fork: ForkModel = field(default_factory=ForkModel)
    fork_length: float = 0.0
    attached: bool = False
    attach_offset: Pose2 = None

    def obstacle_tracks(self):
        """Current centre, velocity and radius of every static obstacle and mover."""
        tracks = list(self.obstacles)
        for mover in self.movers:
            tracks.append(Obstacle(mover.position_at(self.time), mover.velocity_at(self.time), mover.radius))
        return tracks

    @classmethod
    def from_settings(cls, settings, seed=None):
        world = settings.world
        return cls(
            robot=Pose2(*world.robot_start),
            trolley=Pose2(*world.trolley),
            obstacles=tuple(Obstacle(obj["Center"], radius=obj["Radius"]) for obj in world.obstacles),
            movers=tuple(Mover.from_config(obj) for obj in world.movers),
            seed=settings.run.seed if seed is None else seed,
            dt=settings.run.dt,
            fork=ForkModel.from_settings(settings),
        )


def _advance_fork(world, fork_command):
    fork = world.fork
    step = fork.speed * world.dt
    length = world.fork_length
    attached = world.attached
    offset = world.attach_offset

    if fork_command == "Lifting":
        # a loaded fork rests on the trolley frame at the contact height
        stop = fork.grasp_height if attached else fork.stop_height(world.robot, world.trolley)
        if length < stop:
            length = min(length + step, stop)
        if not attached and fork.alignment(world.robot, world.trolley) == "aligned" and length >= fork.grasp_height:
            attached = True
            offset = world.robot.inverse().compose(world.trolley)
            logger.info("Trolley grasped at t=%.1f s", world.time)
    elif fork_command == "Lowering":
        length = max(length - step, 0.0)
    elif fork_command != "Hold":
        raise ValueError(f"Unknown fork command: {fork_command}")
    return length, attached, offset


def tick(world, u, fork_command="Hold"):
    """Advance the world by one step of ``world.dt``.

    Parameters
    ----------
    world: World
    u: (v, w)
        Velocity command applied during the step.
    fork_command: {'Lifting', 'Lowering', 'Hold'}

    Returns
    -------
    World
        The robot moved by :func:`dd_step`, the time advanced by ``dt`` and a grasped
        trolley carried along with the robot.
    """
    length, attached, offset = _advance_fork(world, fork_command)
    robot = dd_step(world.robot, (float(u[0]), float(u[1])), world.dt)
    trolley = robot.compose(offset) if attached else world.trolley
    return replace(
        world,
        robot=robot,
        trolley=trolley,
        time=world.time + world.dt,
        tick=world.tick + 1,
        fork_length=length,
        attached=attached,
        attach_offset=offset,
    )
