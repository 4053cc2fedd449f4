import cv2
import numpy as np
import pytest

from trollector import geometry as geo
from trollector.exceptions import NonPositiveDepth


@pytest.mark.parametrize("theta,expected", [
    (0.0, 0.0),
    (np.pi, np.pi),
    (-np.pi, np.pi),
    (3 * np.pi, np.pi),
    (2 * np.pi + 0.1, 0.1),
    (-0.5, -0.5),
])
def test_wrap_angle(theta, expected):
    assert geo.wrap_angle(theta) == pytest.approx(expected)


def test_wrap_angle_array():
    wrapped = geo.wrap_angle(np.array([0.0, 4.0, -4.0]))
    assert np.all(wrapped > -np.pi) and np.all(wrapped <= np.pi)
    assert wrapped[1] == pytest.approx(4.0 - 2 * np.pi)


def test_pose2_wraps_on_construction():
    assert geo.Pose2(1.0, 2.0, 7.0).theta == pytest.approx(7.0 - 2 * np.pi)


def test_pose2_rejects_non_finite():
    with pytest.raises(ValueError):
        geo.Pose2(np.nan, 0.0, 0.0)


def test_pose2_compose_inverse():
    pose = geo.Pose2(1.0, -2.0, 0.7)
    ident = pose.compose(pose.inverse())
    assert np.allclose(ident.as_array(), 0.0, atol=1e-12)


def test_pose2_compose_matches_matrix():
    first, second = geo.Pose2(0.5, 0.2, 1.2), geo.Pose2(-1.0, 0.3, -0.4)
    composed = first.compose(second)
    assert np.allclose(composed.matrix(), first.matrix() @ second.matrix())
    assert np.allclose(geo.Pose2.from_matrix(composed.matrix()).as_array(), composed.as_array())


def test_transform_point():
    pose = geo.Pose2(1.0, 1.0, np.pi / 2)
    assert np.allclose(pose.transform_point([1.0, 0.0]), [1.0, 2.0])


def test_heading_error_across_pi():
    assert geo.Pose2(0, 0, 3.1).heading_error(geo.Pose2(0, 0, -3.1)) == pytest.approx(2 * np.pi - 6.2)


def test_pose3_rejects_reflection():
    with pytest.raises(ValueError):
        geo.Pose3(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_project_points_centre():
    K = geo.CameraIntrinsics(500.0, 500.0, 320.0, 240.0)
    pixels = geo.project_points(K, geo.Pose3.identity(), [[0.0, 0.0, 2.0], [1.0, -1.0, 4.0]])
    assert (pixels[0].u, pixels[0].v) == (320.0, 240.0)
    assert (pixels[1].u, pixels[1].v) == pytest.approx((445.0, 115.0))


def test_project_points_behind_camera():
    K = geo.CameraIntrinsics(500.0, 500.0, 320.0, 240.0)
    with pytest.raises(NonPositiveDepth):
        geo.project_points_array(K, geo.Pose3.identity(), [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])


def test_intrinsics_need_positive_focal():
    with pytest.raises(ValueError):
        geo.CameraIntrinsics(0.0, 500.0, 0.0, 0.0)


@pytest.mark.parametrize("relative", [
    geo.Pose2(3.0, 0.0, 0.0),
    geo.Pose2(2.0, -0.5, 0.4),
    geo.Pose2(4.0, 1.0, -2.5),
])
def test_camera_pose_planar_round_trip(relative):
    pose = geo.camera_pose_from_planar(relative, 0.1)
    back = geo.planar_from_camera_pose(pose)
    assert np.allclose(back.as_array(), relative.as_array(), atol=1e-12)


def test_camera_pose_from_planar_depth():
    pose = geo.camera_pose_from_planar(geo.Pose2(3.0, 0.0, 0.0), 0.1)
    # 3 m ahead in body axes is 3 m of optical depth, 0.1 m above is -0.1 m in optical y.
    assert np.allclose(pose.translation, [0.0, -0.1, 3.0])


def test_compose_to_world():
    robot = geo.Pose2(1.0, 0.0, np.pi / 2)
    mount = geo.Pose2(0.2, 0.0, 0.0)
    target = geo.Pose2(2.0, 0.0, np.pi)
    world = geo.compose_to_world(robot, target, mount)
    assert np.allclose(world.as_array(), [1.0, 2.2, -np.pi / 2])


def se2(x, y, theta):
    return np.array([
        [np.cos(theta), -np.sin(theta), x],
        [np.sin(theta), np.cos(theta), y],
        [0.0, 0.0, 1.0],
    ])


def random_pose2(rng):
    return geo.Pose2(*rng.uniform(-5.0, 5.0, size=2), rng.uniform(-10.0, 10.0))


def test_compose_to_world_matches_matrix_chain():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        robot, mount, target = random_pose2(rng), random_pose2(rng), random_pose2(rng)
        world = geo.compose_to_world(robot, target, mount)
        expected = se2(robot.x, robot.y, robot.theta) @ se2(mount.x, mount.y, mount.theta) \
            @ se2(target.x, target.y, target.theta)
        assert np.allclose([world.x, world.y], expected[:2, 2], atol=1e-12)
        assert np.allclose([np.cos(world.theta), np.sin(world.theta)], expected[:2, 0], atol=1e-12)
        assert -np.pi < world.theta <= np.pi


def test_compose_is_associative():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        first, second, third = random_pose2(rng), random_pose2(rng), random_pose2(rng)
        left = first.compose(second).compose(third)
        right = first.compose(second.compose(third))
        assert np.allclose([left.x, left.y], [right.x, right.y], atol=1e-12)
        assert geo.wrap_angle(left.theta - right.theta) == pytest.approx(0.0, abs=1e-12)
        chained = geo.compose_to_world(first, third, second)
        assert np.allclose(chained.as_array()[:2], left.as_array()[:2], atol=1e-12)


def test_project_points_matches_opencv_on_random_poses():
    rng = np.random.default_rng(13)
    K = geo.CameraIntrinsics(369.5, 372.0, 640.0, 360.0)
    for _ in range(200):
        rotation, _ = cv2.Rodrigues(rng.uniform(-np.pi / 2, np.pi / 2, size=(3, 1)))
        pose = geo.Pose3(rotation, rng.uniform(-0.5, 0.5, size=3) + [0.0, 0.0, 5.0])
        points = rng.uniform(-1.0, 1.0, size=(8, 3))
        expected, _ = cv2.projectPoints(
            points, cv2.Rodrigues(pose.rotation)[0], pose.translation.reshape(3, 1), K.matrix, None
        )
        pixels = geo.project_points(K, pose, points)
        assert np.allclose([[p.u, p.v] for p in pixels], expected.reshape(-1, 2), atol=1e-8)
        assert np.allclose(geo.project_points_array(K, pose, points), expected.reshape(-1, 2), atol=1e-8)
