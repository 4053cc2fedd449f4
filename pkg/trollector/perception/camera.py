"""Long-range trolley pose pipeline from the six camera keypoints."""
from dataclasses import dataclass

import numpy as np

from trollector.base import BasePoseEstimator
from trollector.geometry import Pose2, CameraIntrinsics, planar_from_camera_pose
from trollector.exceptions import DivergedRefinement
from trollector.perception.pnp import solve_epnp, refine_reprojection
from trollector.utils import get_logger


logger = get_logger("Camera Pipeline")


@dataclass(frozen=True, eq=False)
class CameraRig:
    intrinsics: CameraIntrinsics
    image_size: tuple
    mount_offset: Pose2
    mount_height: float
    template: np.ndarray
    backplane_height: float

    @property
    def height_offset(self):
        """Height of the trolley frame origin above the camera centre."""
        return self.backplane_height - self.mount_height

    @classmethod
    def from_settings(cls, settings):
        cam = settings.camera
        return cls(
            intrinsics=CameraIntrinsics(cam.fx, cam.fy, cam.cx, cam.cy),
            image_size=tuple(cam.image_size),
            mount_offset=Pose2(*cam.mount_offset),
            mount_height=cam.mount_height,
            template=np.array(cam.keypoint_template, dtype=float),
            backplane_height=settings.world.backplane_height,
        )


class CameraPoseEstimator(BasePoseEstimator):
    """Keypoints -> EPnP -> reprojection refinement -> planar trolley pose.

    A diverged refinement falls back to the EPnP pose.
    """
    name = "Camera"

    def __init__(self, rig, max_iters=20, tol=1e-10):
        super().__init__(rig.mount_offset)
        self.rig = rig
        self.max_iters = max_iters
        self.tol = tol

    @classmethod
    def from_settings(cls, settings):
        perception = settings.perception
        return cls(
            CameraRig.from_settings(settings),
            max_iters=perception.refine_max_iters,
            tol=perception.refine_tol,
        )

    def estimate_pose3(self, kps):
        K = self.rig.intrinsics
        initial = solve_epnp(kps, K)
        try:
            return refine_reprojection(initial, kps, K, max_iters=self.max_iters, tol=self.tol)
        except DivergedRefinement as err:
            logger.warning("Using the EPnP pose: %s", err)
            return initial

    def estimate_in_sensor(self, sensors):
        if sensors.keypoints is None:
            return None
        return planar_from_camera_pose(self.estimate_pose3(sensors.keypoints))
