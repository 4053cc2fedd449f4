"""Short-range trolley pose from the backplane point cloud.

Crop the cloud to a range box, fit the backplane with RANSAC followed by a
total-least-squares refit, and turn the plane into a planar trolley pose.
"""
from dataclasses import dataclass

import numpy as np

from trollector.geometry import Pose2
from trollector.exceptions import TooFewPoints, DegenerateConfiguration, VerticalityViolation
from trollector.utils import get_logger


logger = get_logger("Plane Pose")

MAX_VERTICAL_TILT = np.deg2rad(20.0)
MAX_DEGENERATE_DRAWS = 100


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 3)
        if not np.isfinite(pts).all():
            raise ValueError("Point cloud coordinates must be finite.")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class RangeBox:
    min_xyz: np.ndarray
    max_xyz: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min_xyz", np.array(self.min_xyz, dtype=float).reshape(3))
        object.__setattr__(self, "max_xyz", np.array(self.max_xyz, dtype=float).reshape(3))

    def contains(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return np.all((points >= self.min_xyz) & (points <= self.max_xyz), axis=1)


@dataclass(frozen=True, eq=False)
class PlaneModel:
    """Plane ``a*X + b*Y + c*Z + d = 0`` with unit normal and its inlier indices."""
    a: float
    b: float
    c: float
    d: float
    inlier_indices: np.ndarray

    def __post_init__(self):
        norm = np.linalg.norm([self.a, self.b, self.c])
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"Plane normal must be unit length, received norm {norm}")
        if len(self.inlier_indices) < 3:
            raise ValueError("A plane model needs at least three inliers.")

    @property
    def normal(self):
        return np.array([self.a, self.b, self.c])

    def distances(self, points):
        return np.asarray(points) @ self.normal + self.d


def crop_cloud(cloud, box):
    """Keep exactly the points inside the axis-aligned box (bounds inclusive)."""
    return PointCloud(cloud.points[box.contains(cloud.points)])


def fit_plane_tls(points):
    """Total-least-squares plane through the points, as (normal, d) with d <= 0."""
    centroid = points.mean(axis=0)
    _, _, vt_mat = np.linalg.svd(points - centroid, full_matrices=False)
    normal = vt_mat[-1]
    normal = normal / np.linalg.norm(normal)
    dist = -float(normal @ centroid)
    if dist > 0:
        normal, dist = -normal, -dist
    return normal, dist


def ransac_plane(cloud, iterations=200, inlier_tol_m=0.005, seed=0):
    """Fit the dominant plane of the cloud.

    Parameters
    ----------
    cloud: PointCloud
    iterations: int
        Number of three-point hypotheses.
    inlier_tol_m: float
        Largest point-to-plane distance of an inlier.
    seed: int
        Seed of the sampling generator; fixed seeds give identical models.

    Returns
    -------
    PlaneModel
        Refit of the first hypothesis with the largest inlier count, carrying that
        hypothesis' inlier set.
    """
    points = cloud.points
    n_points = len(points)
    if n_points < 3:
        raise TooFewPoints(f"Plane fitting needs at least 3 points, got {n_points}.")

    rng = np.random.default_rng(seed)
    best_count, best_inliers = -1, None
    for _ in range(iterations):
        for _ in range(MAX_DEGENERATE_DRAWS):
            sample = points[rng.choice(n_points, size=3, replace=False)]
            normal = np.cross(sample[1] - sample[0], sample[2] - sample[0])
            norm = np.linalg.norm(normal)
            if norm > 1e-12:
                break
        else:
            raise DegenerateConfiguration("Every sampled point triple is collinear.")

        normal = normal / norm
        inliers = np.flatnonzero(np.abs(points @ normal - normal @ sample[0]) <= inlier_tol_m)
        if len(inliers) > best_count:
            best_count, best_inliers = len(inliers), inliers

    if best_count < 3:
        raise TooFewPoints("The best plane hypothesis has fewer than 3 inliers.")
    normal, dist = fit_plane_tls(points[best_inliers])
    logger.debug("RANSAC kept %d of %d points", best_count, n_points)
    return PlaneModel(normal[0], normal[1], normal[2], dist, best_inliers)


def plane_to_pose(model, cloud):
    """Planar trolley pose in the sensor frame from the backplane plane.

    The position is the inlier centroid projected on the ground. The normal is turned
    to point from the plane toward the sensor (at the cloud origin) and rotated by pi,
    which gives the trolley's forward direction.
    """
    normal = model.normal
    if abs(normal[2]) > np.cos(MAX_VERTICAL_TILT):
        raise VerticalityViolation(f"Plane normal {np.round(normal, 3)} is within 20 degrees of vertical.")
    centroid = cloud.points[model.inlier_indices].mean(axis=0)
    if normal @ (-centroid) < 0:
        normal = -normal
    return Pose2(centroid[0], centroid[1], np.arctan2(normal[1], normal[0]) + np.pi)


def docking_pose_from_trolley(q_tar, standoff_m):
    """Pose ``standoff_m`` behind the trolley along its negative forward axis, facing like the trolley."""
    if standoff_m <= 0:
        raise ValueError(f"Standoff must be positive, received {standoff_m}")
    return Pose2(
        q_tar.x - standoff_m * np.cos(q_tar.theta),
        q_tar.y - standoff_m * np.sin(q_tar.theta),
        q_tar.theta,
    )
