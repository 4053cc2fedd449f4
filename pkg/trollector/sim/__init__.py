"""Deterministic kinematic simulator with synthetic camera and LiDAR sensors."""

from trollector.sim.world import World, Mover, ForkModel, tick
from trollector.sim.sensors import SensorBundle, SensorSuite
