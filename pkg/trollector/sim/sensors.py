"""Synthetic camera keypoints and LiDAR backplane clouds.

Noise is drawn from counter-based streams ``default_rng([seed, tick, stream])``,
so the readings of a tick are a pure function of the world value.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from trollector.geometry import Pose2, rot_z, camera_pose_from_planar, project_points_array
from trollector.constants.frames import CAMERA_STREAM, LIDAR_STREAM, POSE_STREAM
from trollector.perception.pnp import KeypointSet
from trollector.perception.plane import PointCloud
from trollector.perception.camera import CameraRig
from trollector.perception.lidar import LidarRig


NUM_BACKPLANE_KEYPOINTS = 4
MIN_CLUTTER_RANGE = 0.2


def noise_rng(world, stream):
    return np.random.default_rng([world.seed, world.tick, stream])


@dataclass(frozen=True, eq=False)
class SensorBundle:
    """Everything the robot perceives at one tick."""
    time: float
    robot_pose: Pose2
    keypoints: Optional[KeypointSet] = None
    cloud: Optional[PointCloud] = None
    obstacles: tuple = ()
    fork_length: float = 0.0

    def summary(self):
        """JSON friendly digest used in the per-tick log."""
        return {
            "time": self.time,
            "robot_pose": self.robot_pose.as_array().tolist(),
            "keypoints": None if self.keypoints is None else self.keypoints.image_points.tolist(),
            "cloud_points": 0 if self.cloud is None else len(self.cloud),
            "obstacles": [obs.to_json() for obs in self.obstacles],
            "fork_length": self.fork_length,
        }


def relative_to_sensor(world, mount_offset):
    """Planar trolley pose in the body axes of a sensor mounted at ``mount_offset``."""
    sensor = world.robot.compose(mount_offset)
    return sensor.inverse().compose(world.trolley)


def keypoints_in_view(pixels, image_size):
    width, height = image_size
    inside_u = (pixels[:, 0] >= 0) & (pixels[:, 0] <= width)
    inside_v = (pixels[:, 1] >= 0) & (pixels[:, 1] <= height)
    return bool(np.all(inside_u & inside_v))


def sense_camera(world, rig, noise_px=0.0, noise_front_px=None):
    """Six trolley keypoints as seen by the camera, or None when any leaves the image.

    Parameters
    ----------
    world: World
    rig: CameraRig
        Intrinsics, image bounds, mount and keypoint template.
    noise_px: float
        Pixel noise sigma of the four backplane keypoints.
    noise_front_px: float, optional
        Pixel noise sigma of the front keypoints; ``noise_px`` when omitted.

    Returns
    -------
    KeypointSet or None
        Absent when the trolley is behind the camera or any noiseless keypoint lies
        outside the image.
    """
    relative = relative_to_sensor(world, rig.mount_offset)
    pose = camera_pose_from_planar(relative, rig.height_offset)
    if np.any(pose.transform(rig.template)[:, 2] <= 0):
        return None
    pixels = project_points_array(rig.intrinsics, pose, rig.template)
    if not keypoints_in_view(pixels, rig.image_size):
        return None

    if noise_front_px is None:
        noise_front_px = noise_px
    sigma = np.full(len(pixels), noise_front_px, dtype=float)
    sigma[:NUM_BACKPLANE_KEYPOINTS] = noise_px
    if np.any(sigma > 0):
        pixels = pixels + noise_rng(world, CAMERA_STREAM).normal(size=pixels.shape) * sigma[:, None]
    return KeypointSet(pixels, rig.template)


def backplane_samples(rig, density, rng):
    """``density`` points drawn uniformly on the backplane rectangle, in the trolley frame."""
    width, height = rig.backplane_size
    ys = rng.uniform(-width / 2.0, width / 2.0, size=density)
    zs = rng.uniform(-height / 2.0, height / 2.0, size=density)
    return np.stack([np.zeros(density), ys, zs], axis=1)


def in_fov(points, rig):
    """Points inside the horizontal and vertical field of view cone of the LiDAR."""
    half_h, half_v = rig.half_fov
    horiz = np.arctan2(points[:, 1], points[:, 0])
    vert = np.arctan2(points[:, 2], np.hypot(points[:, 0], points[:, 1]))
    return (points[:, 0] > 0) & (np.abs(horiz) <= half_h) & (np.abs(vert) <= half_v)


def backplane_visible(world, rig):
    """Analytic presence predicate: centre within range and FoV, sensor behind the plane."""
    relative = relative_to_sensor(world, rig.mount_offset)
    centre = np.array([[relative.x, relative.y, rig.backplane_height - rig.mount_height]])
    if np.hypot(relative.x, relative.y) > rig.max_range:
        return False
    if not in_fov(centre, rig)[0]:
        return False
    return relative.inverse().x < 0


def sense_lidar(world, rig, noise_m=0.0, density=None, clutter=0, jitter=(0.0, 0.0)):
    """Backplane point cloud in the LiDAR frame, or None when the backplane is not seen.

    Parameters
    ----------
    world: World
    rig: LidarRig
    noise_m: float
        Range noise sigma, applied along each beam.
    density: int, optional
        Number of uniform samples drawn on the backplane before the field of view
        crop; the rig's density when omitted.
    clutter: int
        Number of uniform clutter points added inside the field of view.
    jitter: (float, float)
        Per-scan registration noise sigmas (translation in meters, yaw in radians).

    Returns
    -------
    PointCloud or None
    """
    if not backplane_visible(world, rig):
        return None

    rng = noise_rng(world, LIDAR_STREAM)
    relative = relative_to_sensor(world, rig.mount_offset)
    samples = backplane_samples(rig, rig.density if density is None else density, rng)
    offset = np.array([relative.x, relative.y, rig.backplane_height - rig.mount_height])
    points = samples @ rot_z(relative.theta).T + offset
    points = points[in_fov(points, rig) & (np.linalg.norm(points, axis=1) <= rig.max_range)]
    if len(points) < 3:
        return None

    if noise_m > 0:
        ranges = np.linalg.norm(points, axis=1, keepdims=True)
        points = points + rng.normal(scale=noise_m, size=(len(points), 1)) * points / ranges
    if clutter > 0:
        half_h, half_v = rig.half_fov
        depth = rng.uniform(MIN_CLUTTER_RANGE, rig.max_range, size=clutter)
        side = rng.uniform(-1.0, 1.0, size=clutter) * depth * np.tan(half_h)
        up = rng.uniform(-1.0, 1.0, size=clutter) * depth * np.tan(half_v)
        points = np.vstack([points, np.stack([depth, side, up], axis=1)])
    sigma_t, sigma_yaw = jitter
    if sigma_t > 0 or sigma_yaw > 0:
        yaw = rng.normal(scale=sigma_yaw) if sigma_yaw > 0 else 0.0
        shift = rng.normal(scale=sigma_t, size=2) if sigma_t > 0 else np.zeros(2)
        points = points @ rot_z(yaw).T + np.array([shift[0], shift[1], 0.0])
    return PointCloud(points)


def sense_pose(world, pose_noise=(0.0, 0.0)):
    sigma_pos, sigma_head = pose_noise
    if sigma_pos <= 0 and sigma_head <= 0:
        return world.robot
    noise = noise_rng(world, POSE_STREAM).normal(size=3) * np.array([sigma_pos, sigma_pos, sigma_head])
    return Pose2.from_array(world.robot.as_array() + noise)


class SensorSuite:
    """Camera, LiDAR and odometry of the simulated robot, built from the scenario settings."""
    def __init__(self, camera_rig, lidar_rig, camera_noise=(0.0, 0.0), lidar_noise=0.0,
                 clutter=0, jitter=(0.0, 0.0), pose_noise=(0.0, 0.0)):
        self.camera_rig = camera_rig
        self.lidar_rig = lidar_rig
        self.camera_noise = camera_noise
        self.lidar_noise = lidar_noise
        self.clutter = clutter
        self.jitter = jitter
        self.pose_noise = pose_noise

    @classmethod
    def from_settings(cls, settings):
        cam, lidar = settings.camera, settings.lidar
        return cls(
            CameraRig.from_settings(settings),
            LidarRig.from_settings(settings),
            camera_noise=(cam.noise_back_px, cam.noise_front_px),
            lidar_noise=lidar.range_noise,
            clutter=lidar.clutter,
            jitter=(lidar.jitter_translation, lidar.jitter_yaw),
            pose_noise=tuple(settings.world.pose_noise),
        )

    def sense(self, world):
        return SensorBundle(
            time=world.time,
            robot_pose=sense_pose(world, self.pose_noise),
            keypoints=sense_camera(world, self.camera_rig, *self.camera_noise),
            cloud=sense_lidar(world, self.lidar_rig, self.lidar_noise, clutter=self.clutter, jitter=self.jitter),
            obstacles=tuple(world.obstacle_tracks()),
            fork_length=world.fork_length,
        )
