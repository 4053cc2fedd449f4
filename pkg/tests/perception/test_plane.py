import numpy as np
import pytest

from trollector.geometry import Pose2
from trollector.perception.plane import (
    PointCloud, RangeBox, crop_cloud, fit_plane_tls, ransac_plane, plane_to_pose, docking_pose_from_trolley
)
from trollector.exceptions import TooFewPoints, VerticalityViolation


def grid_on_z1(n_side=25):
    xs, ys = np.meshgrid(np.linspace(-1, 1, n_side), np.linspace(-1, 1, 20))
    return np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)], axis=1)


def test_crop_keeps_everything_inside():
    cloud = PointCloud(np.random.default_rng(0).uniform(-1, 1, size=(100, 3)))
    cropped = crop_cloud(cloud, RangeBox([-1, -1, -1], [1, 1, 1]))
    assert np.array_equal(cropped.points, cloud.points)


def test_crop_annihilating_box():
    cloud = PointCloud(np.random.default_rng(0).uniform(-1, 1, size=(100, 3)))
    assert len(crop_cloud(cloud, RangeBox([2, -1, -1], [3, 1, 1]))) == 0


def test_crop_matches_linear_scan():
    points = np.random.default_rng(1).uniform(-2, 2, size=(300, 3))
    box = RangeBox([-1.0, -0.5, 0.0], [1.5, 0.5, 2.0])
    expected = [p for p in points if all(box.min_xyz[i] <= p[i] <= box.max_xyz[i] for i in range(3))]
    assert np.array_equal(crop_cloud(PointCloud(points), box).points, np.array(expected))


def test_ransac_exact_plane():
    points = grid_on_z1()
    model = ransac_plane(PointCloud(points), iterations=50, inlier_tol_m=0.005, seed=0)
    assert np.allclose([model.a, model.b, model.c, model.d], [0.0, 0.0, 1.0, -1.0], atol=1e-9)
    assert len(model.inlier_indices) == len(points)


def _contaminated(seed):
    rng = np.random.default_rng(seed)
    normal = rng.normal(size=3)
    normal /= np.linalg.norm(normal)
    basis = np.linalg.svd(normal[None, :])[2][1:]
    n_in, n_out = 350, 150
    coords = rng.uniform(-0.8, 0.8, size=(n_in, 2))
    inliers = coords @ basis + 0.5 * normal + rng.normal(scale=0.001, size=(n_in, 1)) * normal
    outliers = rng.uniform(-1.0, 1.0, size=(n_out, 3))
    return np.vstack([inliers, outliers]), inliers


def test_ransac_with_outliers():
    hits, trials = 0, 100
    for seed in range(trials):
        points, inliers = _contaminated(seed)
        model = ransac_plane(PointCloud(points), iterations=200, inlier_tol_m=0.005, seed=seed)
        ref_normal, ref_d = fit_plane_tls(inliers)
        angle = np.degrees(np.arccos(min(1.0, abs(model.normal @ ref_normal))))
        d_err = abs(abs(model.d) - abs(ref_d))
        hits += int(angle < 0.5 and d_err < 0.002)
    assert hits >= 0.99 * trials


def test_ransac_is_deterministic():
    points, _ = _contaminated(7)
    first = ransac_plane(PointCloud(points), seed=11)
    second = ransac_plane(PointCloud(points), seed=11)
    assert np.array_equal(first.inlier_indices, second.inlier_indices)
    assert first.d == second.d


def test_ransac_too_few_points():
    with pytest.raises(TooFewPoints):
        ransac_plane(PointCloud([[0, 0, 0], [1, 0, 0]]))


def test_plane_to_pose_facing_sensor():
    ys, zs = np.meshgrid(np.linspace(-0.25, 0.25, 10), np.linspace(-0.25, 0.25, 10))
    points = np.stack([np.full(ys.size, 2.0), ys.ravel() + 0.1, zs.ravel()], axis=1)
    cloud = PointCloud(points)
    pose = plane_to_pose(ransac_plane(cloud, seed=0), cloud)
    assert np.allclose(pose.as_array(), [2.0, 0.1, 0.0], atol=1e-9)


def test_plane_to_pose_rejects_floor():
    cloud = PointCloud(grid_on_z1())
    with pytest.raises(VerticalityViolation):
        plane_to_pose(ransac_plane(cloud, seed=0), cloud)


def test_docking_pose():
    dock = docking_pose_from_trolley(Pose2(5.0, 1.0, np.pi / 2), 0.4)
    assert np.allclose(dock.as_array(), [5.0, 0.6, np.pi / 2])
    with pytest.raises(ValueError):
        docking_pose_from_trolley(Pose2(), 0.0)
