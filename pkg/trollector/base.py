"""Base classes of this project.

Defines common interfaces of the trolley pose estimators.
"""
from abc import ABCMeta, abstractmethod

from trollector.utils import get_logger
from trollector.geometry import compose_to_world
from trollector.exceptions import TrollectorError


logger = get_logger("Base Class")


class BasePoseEstimator(metaclass=ABCMeta):
    """Base class of the trolley pose pipelines.

    Sub-classes turn one tick of sensor data into a world-frame trolley pose.
    A pipeline never lets a numerical failure escape into the mission loop:
    errors of this project are logged and reported as "no measurement".
    """
    name = "pose"

    def __init__(self, mount_offset):
        self.mount_offset = mount_offset

    @abstractmethod
    def estimate_in_sensor(self, sensors):
        """Return the trolley pose in the planar sensor frame, or None if the sensor has no data."""
        raise NotImplementedError

    def estimate(self, sensors):
        """World-frame trolley pose of this tick, or None."""
        try:
            local = self.estimate_in_sensor(sensors)
        except TrollectorError as err:
            logger.warning("%s pipeline failed at t=%.2f: %s", self.name, sensors.time, err)
            return None
        if local is None:
            return None
        return compose_to_world(sensors.robot_pose, local, self.mount_offset)
