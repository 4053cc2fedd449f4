"""Short-range trolley pose pipeline from the LiDAR cloud."""
from dataclasses import dataclass

import numpy as np

from trollector.base import BasePoseEstimator
from trollector.geometry import Pose2
from trollector.perception.plane import RangeBox, crop_cloud, ransac_plane, plane_to_pose


@dataclass(frozen=True, eq=False)
class LidarRig:
    mount_offset: Pose2
    mount_height: float
    fov: tuple
    max_range: float
    density: int
    backplane_size: tuple
    backplane_height: float

    @property
    def half_fov(self):
        """Half field of view (horizontal, vertical) in radians."""
        return np.deg2rad(self.fov[0]) / 2.0, np.deg2rad(self.fov[1]) / 2.0

    @classmethod
    def from_settings(cls, settings):
        lidar = settings.lidar
        return cls(
            mount_offset=Pose2(*lidar.mount_offset),
            mount_height=lidar.mount_height,
            fov=tuple(lidar.fov),
            max_range=lidar.max_range,
            density=lidar.density,
            backplane_size=tuple(settings.world.backplane_size),
            backplane_height=settings.world.backplane_height,
        )


class LidarPoseEstimator(BasePoseEstimator):
    """Crop -> RANSAC plane -> planar trolley pose."""
    name = "LiDAR"

    def __init__(self, rig, box, iterations=200, inlier_tol_m=0.005, seed=0):
        super().__init__(rig.mount_offset)
        self.rig = rig
        self.box = box
        self.iterations = iterations
        self.inlier_tol_m = inlier_tol_m
        self.seed = seed

    @classmethod
    def from_settings(cls, settings):
        perception = settings.perception
        return cls(
            LidarRig.from_settings(settings),
            RangeBox(perception.crop_min, perception.crop_max),
            iterations=perception.ransac_iterations,
            inlier_tol_m=perception.inlier_tol,
            seed=settings.run.seed,
        )

    def estimate_in_sensor(self, sensors):
        if sensors.cloud is None:
            return None
        cropped = crop_cloud(sensors.cloud, self.box)
        model = ransac_plane(cropped, iterations=self.iterations, inlier_tol_m=self.inlier_tol_m, seed=self.seed)
        return plane_to_pose(model, cropped)
