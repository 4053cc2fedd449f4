import numpy as np
import pytest

from trollector.geometry import Pose2, camera_pose_from_planar, project_points_array
from trollector.setting_loaders import ScenarioSettings
from trollector.perception.camera import CameraRig
from trollector.perception.lidar import LidarRig
from trollector.planner.barriers import Obstacle
from trollector.sim.world import World
from trollector.sim.sensors import (
    SensorSuite, sense_camera, sense_lidar, sense_pose, relative_to_sensor, backplane_visible, backplane_samples
)


@pytest.fixture(scope="module")
def settings():
    return ScenarioSettings()


@pytest.fixture(scope="module")
def camera_rig(settings):
    return CameraRig.from_settings(settings)


@pytest.fixture(scope="module")
def lidar_rig(settings):
    return LidarRig.from_settings(settings)


def polar(dist, bearing_deg, yaw=0.0):
    bearing = np.deg2rad(bearing_deg)
    return Pose2(dist * np.cos(bearing), dist * np.sin(bearing), bearing + yaw)


def test_noiseless_keypoints_are_projections(camera_rig):
    world = World(robot=Pose2(), trolley=polar(3.0, 10.0, 0.2))
    kps = sense_camera(world, camera_rig)
    pose = camera_pose_from_planar(relative_to_sensor(world, camera_rig.mount_offset), camera_rig.height_offset)
    expected = project_points_array(camera_rig.intrinsics, pose, camera_rig.template)
    assert np.allclose(kps.image_points, expected)
    assert np.all(kps.image_points[:, 0] <= camera_rig.image_size[0])


@pytest.mark.parametrize("trolley", [polar(3.0, 85.0), Pose2(-3.0, 0.0, 0.0)])
def test_trolley_outside_camera_view(camera_rig, trolley):
    assert sense_camera(World(robot=Pose2(), trolley=trolley), camera_rig) is None


def test_camera_noise_is_reproducible(camera_rig):
    world = World(robot=Pose2(), trolley=polar(3.0, 0.0), seed=3, tick=5)
    first = sense_camera(world, camera_rig, 1.0)
    second = sense_camera(world, camera_rig, 1.0)
    other_tick = sense_camera(World(robot=Pose2(), trolley=polar(3.0, 0.0), seed=3, tick=6), camera_rig, 1.0)
    assert np.array_equal(first.image_points, second.image_points)
    assert not np.allclose(first.image_points, other_tick.image_points)


def test_front_keypoints_use_own_sigma(camera_rig):
    world = World(robot=Pose2(), trolley=polar(3.0, 0.0))
    clean = sense_camera(world, camera_rig)
    noisy = sense_camera(world, camera_rig, 0.0, 2.0)
    assert np.allclose(noisy.image_points[:4], clean.image_points[:4])
    assert not np.allclose(noisy.image_points[4:], clean.image_points[4:])


def test_lidar_sees_backplane_in_range(lidar_rig):
    world = World(robot=Pose2(), trolley=polar(1.5, 5.0))
    cloud = sense_lidar(world, lidar_rig)
    assert cloud is not None
    assert len(cloud) > 50
    assert np.all(np.linalg.norm(cloud.points, axis=1) <= lidar_rig.max_range)
    assert backplane_visible(world, lidar_rig)


@pytest.mark.parametrize("trolley", [polar(3.0, 0.0), polar(1.5, 85.0), polar(1.5, 0.0, np.pi)])
def test_lidar_absent(lidar_rig, trolley):
    world = World(robot=Pose2(), trolley=trolley)
    assert not backplane_visible(world, lidar_rig)
    assert sense_lidar(world, lidar_rig) is None


def test_lidar_clutter_and_density(lidar_rig):
    world = World(robot=Pose2(), trolley=polar(1.5, 0.0))
    clean = sense_lidar(world, lidar_rig)
    cluttered = sense_lidar(world, lidar_rig, clutter=30)
    assert len(cluttered) == len(clean) + 30
    assert len(sense_lidar(world, lidar_rig, density=100)) < len(clean)


def test_lidar_noise_is_reproducible(lidar_rig):
    world = World(robot=Pose2(), trolley=polar(1.5, 0.0), seed=1, tick=2)
    first = sense_lidar(world, lidar_rig, 0.01, jitter=(0.01, 0.01))
    second = sense_lidar(world, lidar_rig, 0.01, jitter=(0.01, 0.01))
    assert np.array_equal(first.points, second.points)


def test_sense_pose():
    world = World(robot=Pose2(1.0, 2.0, 0.5), trolley=Pose2(), seed=4, tick=1)
    assert sense_pose(world) == world.robot
    noisy = sense_pose(world, (0.01, 0.01))
    assert noisy.distance_to(world.robot) < 0.1
    assert noisy == sense_pose(world, (0.01, 0.01))


def test_suite_bundle(settings):
    obstacle = Obstacle([2.0, 2.0], radius=0.3)
    world = World(robot=Pose2(), trolley=polar(3.0, 0.0), obstacles=(obstacle,), fork_length=0.1)
    bundle = SensorSuite.from_settings(settings).sense(world)
    assert bundle.keypoints is not None
    assert bundle.cloud is None
    assert bundle.fork_length == 0.1
    assert len(bundle.obstacles) == 1
    summary = bundle.summary()
    assert summary["cloud_points"] == 0
    assert len(summary["keypoints"]) == 6


@pytest.mark.parametrize("density", [1, 7, 400, 500])
def test_backplane_samples_have_exact_count(lidar_rig, density):
    samples = backplane_samples(lidar_rig, density, np.random.default_rng(0))
    width, height = lidar_rig.backplane_size
    assert samples.shape == (density, 3)
    assert np.all(samples[:, 0] == 0.0)
    assert np.all(np.abs(samples[:, 1]) <= width / 2.0)
    assert np.all(np.abs(samples[:, 2]) <= height / 2.0)


@pytest.mark.parametrize("density", [123, 500])
def test_visible_backplane_returns_every_sample(lidar_rig, density):
    world = World(robot=Pose2(), trolley=polar(1.5, 0.0), seed=2, tick=4)
    cloud = sense_lidar(world, lidar_rig, density=density)
    assert len(cloud) == density
    other = sense_lidar(World(robot=Pose2(), trolley=polar(1.5, 0.0), seed=2, tick=5), lidar_rig, density=density)
    assert not np.allclose(cloud.points, other.points)


def test_camera_pixel_noise_has_requested_sigma(camera_rig):
    sigma = 2.5
    trolley = polar(3.0, 0.0)
    clean = sense_camera(World(robot=Pose2(), trolley=trolley), camera_rig)
    errors = []
    for tick in range(1250):
        noisy = sense_camera(World(robot=Pose2(), trolley=trolley, seed=7, tick=tick), camera_rig, sigma, 0.0)
        errors.append((noisy.image_points - clean.image_points)[:4].ravel())
    errors = np.concatenate(errors)
    assert errors.size >= 10000
    assert abs(np.mean(errors)) < 0.05 * sigma
    assert np.std(errors) == pytest.approx(sigma, rel=0.05)


def test_lidar_range_noise_has_requested_sigma(lidar_rig):
    sigma = 0.01
    errors = []
    for tick in range(12):
        world = World(robot=Pose2(), trolley=polar(1.5, 0.0), seed=5, tick=tick)
        clean = sense_lidar(world, lidar_rig, density=1000)
        noisy = sense_lidar(world, lidar_rig, sigma, density=1000)
        errors.append(np.linalg.norm(noisy.points, axis=1) - np.linalg.norm(clean.points, axis=1))
    errors = np.concatenate(errors)
    assert errors.size >= 10000
    assert abs(np.mean(errors)) < 0.05 * sigma
    assert np.std(errors) == pytest.approx(sigma, rel=0.05)
