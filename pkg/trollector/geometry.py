"""Shared geometric value types and the pinhole projection model.

Every type here is an immutable value. Planar angles are wrapped into (-pi, pi]
when a value is constructed, never lazily.
"""
# pylint: disable=C0103
from dataclasses import dataclass, field

import numpy as np

from trollector.exceptions import NonPositiveDepth
from trollector.constants.frames import OPTICAL_FROM_BODY


TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap angles into (-pi, pi]. Works on scalars and numpy arrays."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), TWO_PI)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def rot_z(theta):
    cos, sin = np.cos(theta), np.sin(theta)
    return np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose2:
    """Planar pose ``[x, y, theta]``; theta = 0 faces +x, counterclockwise positive."""
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        if not np.isfinite([self.x, self.y, self.theta]).all():
            raise ValueError(f"Pose2 fields must be finite, received {self}")

    @classmethod
    def from_array(cls, arr):
        x, y, theta = np.asarray(arr, dtype=float).reshape(3)
        return cls(x, y, theta)

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=float)
        return cls(mat[0, 2], mat[1, 2], np.arctan2(mat[1, 0], mat[0, 0]))

    @property
    def position(self):
        return np.array([self.x, self.y])

    def as_array(self):
        return np.array([self.x, self.y, self.theta])

    def matrix(self):
        """Homogeneous 3x3 SE(2) matrix."""
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        return np.array([[cos, -sin, self.x], [sin, cos, self.y], [0.0, 0.0, 1.0]])

    def compose(self, other):
        """Return ``self * other``, i.e. ``other`` expressed in the frame of ``self`` mapped out."""
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        return Pose2(
            self.x + cos * other.x - sin * other.y,
            self.y + sin * other.x + cos * other.y,
            self.theta + other.theta,
        )

    def inverse(self):
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        return Pose2(-cos * self.x - sin * self.y, sin * self.x - cos * self.y, -self.theta)

    def transform_point(self, point):
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        px, py = np.asarray(point, dtype=float)[:2]
        return np.array([self.x + cos * px - sin * py, self.y + sin * px + cos * py])

    def distance_to(self, other):
        return float(np.hypot(self.x - other.x, self.y - other.y))

    def heading_error(self, other):
        return abs(wrap_angle(self.theta - other.theta))


@dataclass(frozen=True, eq=False)
class Pose3:
    """Rigid transform (R, T) mapping model coordinates into camera coordinates."""
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float).reshape(3, 3)
        trans = np.array(self.translation, dtype=float).reshape(3)
        if not np.allclose(rot.T @ rot, np.eye(3), atol=1e-9, rtol=0):
            raise ValueError("Rotation of Pose3 is not orthonormal.")
        if abs(np.linalg.det(rot) - 1.0) > 1e-9:
            raise ValueError("Rotation of Pose3 must have determinant +1.")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def matrix(self):
        """The 3x4 matrix [R|T]."""
        return np.hstack([self.rotation, self.translation[:, None]])

    def transform(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return points @ self.rotation.T + self.translation


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"Focal lengths must be positive, received fx={self.fx}, fy={self.fy}")

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class PixelPoint:
    u: float
    v: float

    def __post_init__(self):
        if not (np.isfinite(self.u) and np.isfinite(self.v)):
            raise ValueError(f"Pixel coordinates must be finite, received ({self.u}, {self.v})")


def project_points_array(K, pose, model_points):
    """Vectorised pinhole projection, ``p = K [R|T] X / z``.

    Parameters
    ----------
    K: CameraIntrinsics
        Intrinsics of the camera.
    pose: Pose3
        Transform from the model frame into the camera frame.
    model_points: (n, 3) array
        Points in the model frame.

    Returns
    -------
    pixels: (n, 2) array

    Raises
    ------
    NonPositiveDepth
        If any transformed point has camera depth <= 0.
    """
    cam_points = pose.transform(model_points)
    depth = cam_points[:, 2]
    if np.any(depth <= 0):
        raise NonPositiveDepth(f"{int(np.sum(depth <= 0))} point(s) lie on or behind the camera plane.")
    u = K.fx * cam_points[:, 0] / depth + K.cx
    v = K.fy * cam_points[:, 1] / depth + K.cy
    return np.stack([u, v], axis=1)


def project_points(K, pose, model_points):
    return [PixelPoint(u, v) for u, v in project_points_array(K, pose, model_points)]


def compose_to_world(robot_world, target_in_sensor, sensor_offset):
    """Chain the robot pose, the sensor mount and the sensed target into a world pose."""
    return robot_world.compose(sensor_offset).compose(target_in_sensor)


def camera_pose_from_planar(relative, height_offset):
    """Build the camera-frame pose of a trolley from its planar pose relative to the camera.

    Parameters
    ----------
    relative: Pose2
        Trolley pose in the planar (body-axes) frame of the camera.
    height_offset: float
        Height of the trolley frame origin above the camera centre.

    Returns
    -------
    Pose3
        (R, T) taking trolley-frame points into optical-frame points.
    """
    rotation = OPTICAL_FROM_BODY @ rot_z(relative.theta)
    translation = OPTICAL_FROM_BODY @ np.array([relative.x, relative.y, height_offset])
    return Pose3(rotation, translation)


def planar_from_camera_pose(pose):
    """Reduce an optical-frame trolley pose to a planar pose in the camera's body axes.

    The yaw is the direction of the trolley forward axis projected onto the ground plane;
    the height component of the translation is dropped.
    """
    body_rot = OPTICAL_FROM_BODY.T @ pose.rotation
    forward = body_rot[:, 0]
    position = OPTICAL_FROM_BODY.T @ pose.translation
    return Pose2(position[0], position[1], np.arctan2(forward[1], forward[0]))
