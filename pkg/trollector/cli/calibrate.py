import click

from trollector.cli import load_scenario, echo_json
from trollector.cli.common_options import add_common_options, COMMON_OUTPUT_OPTIONS
from trollector.utils import LazyLoader


calibration = LazyLoader("calibration", globals(), "trollector.sim.calibration")


def _sweep(sensor, settings, n_frames, seed, rounds):
    # pylint: disable=C0415
    from trollector.perception.camera import CameraPoseEstimator
    from trollector.perception.lidar import LidarPoseEstimator
    from trollector.perception.filters import GateParams

    if sensor == "camera":
        estimator = CameraPoseEstimator.from_settings(settings)
        frames = calibration.random_frames(n_frames, calibration.CAMERA_FRAMES, estimator.rig.mount_offset, seed)
        gate = GateParams.from_settings(settings.perception)
        result = calibration.calibrate_camera(frames, estimator, rounds=rounds, gate=gate)
        fresh = calibration.camera_errors(
            calibration.fresh_frames(frames, seed + 1), estimator,
            result.knobs["noise_back_px"], result.knobs["noise_front_px"], gate=gate
        )
        return result, fresh

    estimator = LidarPoseEstimator.from_settings(settings)
    lidar = settings.lidar
    frames = calibration.random_frames(n_frames, calibration.LIDAR_FRAMES, estimator.rig.mount_offset, seed)
    result = calibration.calibrate_lidar(
        frames, estimator, range_noise=lidar.range_noise, clutter=lidar.clutter, rounds=rounds
    )
    fresh = calibration.lidar_errors(
        calibration.fresh_frames(frames, seed + 1), estimator,
        result.knobs["jitter_translation"], result.knobs["jitter_yaw"], lidar.range_noise, lidar.clutter
    )
    return result, fresh


@click.command()
@click.argument("sensor", type=click.Choice(["camera", "lidar"], case_sensitive=False))
@add_common_options(COMMON_OUTPUT_OPTIONS)
@click.option("-n", "--num-frames", help="Number of random frames.", type=int, default=1000, show_default=True)
@click.option("--seed", help="Seed of the frame geometry and noise.", type=int, default=0, show_default=True)
@click.option("-r", "--rounds", help="Largest number of alternating rounds.", type=int, default=3, show_default=True)
@click.option("-s", "--scenario", help="Scenario whose camera, LiDAR and perception settings are used.")
def calibrate(sensor, output, num_frames, seed, rounds, scenario):
    """Pick the simulated sensor noise that reproduces the target pose errors.

    Camera targets are 0.17 m and 0.11 rad over the 1.5 to 4 m range; LiDAR
    targets are 0.03 m and 0.02 rad over the 0.5 to 2 m range. Camera errors are
    measured on the filtered pose, as the mission sees it. The found noise
    levels are re-evaluated on fresh noise draws of the same frames.
    """
    settings = load_scenario(scenario)
    result, fresh = _sweep(sensor.lower(), settings, num_frames, seed, rounds)
    obj = result.to_json()
    obj["sensor"] = sensor.lower()
    obj["validation"] = fresh.to_json()
    echo_json(obj, output)
