import numpy as np
import pytest

from trollector.geometry import Pose2
from trollector.setting_loaders import ScenarioSettings
from trollector.perception import CameraPoseEstimator, LidarPoseEstimator
from trollector.perception.plane import PointCloud
from trollector.sim.world import World
from trollector.sim.sensors import SensorBundle, sense_camera, sense_lidar


@pytest.fixture(scope="module")
def settings():
    return ScenarioSettings()


@pytest.mark.parametrize("robot,trolley", [
    (Pose2(), Pose2(3.2, 0.1, 0.2)),
    (Pose2(1.0, -1.0, 0.5), Pose2(3.5, 0.5, 0.3)),
])
def test_camera_pipeline_noiseless(settings, robot, trolley):
    estimator = CameraPoseEstimator.from_settings(settings)
    world = World(robot=robot, trolley=trolley)
    kps = sense_camera(world, estimator.rig)
    estimate = estimator.estimate(SensorBundle(time=0.0, robot_pose=robot, keypoints=kps))
    assert np.allclose(estimate.as_array(), trolley.as_array(), atol=1e-6)


def test_camera_pipeline_without_keypoints(settings):
    estimator = CameraPoseEstimator.from_settings(settings)
    assert estimator.estimate(SensorBundle(time=0.0, robot_pose=Pose2())) is None


def test_lidar_pipeline_noiseless(settings):
    estimator = LidarPoseEstimator.from_settings(settings)
    robot, trolley = Pose2(0.5, 0.2, 0.1), Pose2(1.7, 0.3, 0.15)
    world = World(robot=robot, trolley=trolley)
    cloud = sense_lidar(world, estimator.rig)
    estimate = estimator.estimate(SensorBundle(time=0.0, robot_pose=robot, cloud=cloud))
    # uniform samples put the centroid off the backplane centre by the sampling error
    assert estimate.distance_to(trolley) < 0.02
    assert estimate.theta == pytest.approx(trolley.theta, abs=1e-6)


def test_lidar_failure_is_no_measurement(settings):
    estimator = LidarPoseEstimator.from_settings(settings)
    xs, ys = np.meshgrid(np.linspace(0.5, 1.5, 10), np.linspace(-0.5, 0.5, 10))
    floor = PointCloud(np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1))
    assert estimator.estimate(SensorBundle(time=0.0, robot_pose=Pose2(), cloud=floor)) is None
