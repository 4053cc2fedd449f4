import numpy as np
import pytest

from trollector.geometry import Pose2
from trollector.setting_loaders import ScenarioSettings
from trollector.perception.plane import docking_pose_from_trolley
from trollector.planner.barriers import Obstacle
from trollector.mission.manipulator import ManipulatorState, ManipulatorParams, Mode, manipulator_update
from trollector.sim.world import World, Mover, ForkModel, tick


TROLLEY = Pose2(3.0, 1.0, 0.5)


def test_zero_command_is_fixed_point():
    world = World(robot=Pose2(1.0, 2.0, 0.3), trolley=TROLLEY)
    after = tick(world, (0.0, 0.0))
    assert after.robot.as_array() == pytest.approx(world.robot.as_array())
    assert after.time == pytest.approx(0.1)
    assert after.tick == 1
    assert world.tick == 0


def test_robot_drives_straight():
    world = World(robot=Pose2(), trolley=TROLLEY)
    for _ in range(10):
        world = tick(world, (1.0, 0.0))
    assert world.robot.as_array() == pytest.approx([1.0, 0.0, 0.0])


def test_mover_walks_at_constant_speed():
    mover = Mover([[0.0, 0.0], [1.0, 0.0]], speed=1.0)
    world = World(robot=Pose2(), trolley=TROLLEY, movers=(mover,))
    for step in range(1, 6):
        world = tick(world, (0.0, 0.0))
        track = world.obstacle_tracks()[0]
        assert track.center == pytest.approx([0.1 * step, 0.0])
        assert track.velocity == pytest.approx([1.0, 0.0])


def test_mover_waits_then_stops():
    mover = Mover([[0.0, 0.0], [0.0, 2.0]], speed=0.5, start_time=1.0)
    assert mover.position_at(0.5) == pytest.approx([0.0, 0.0])
    assert mover.velocity_at(0.5) == pytest.approx([0.0, 0.0])
    assert mover.position_at(3.0) == pytest.approx([0.0, 1.0])
    assert mover.velocity_at(3.0) == pytest.approx([0.0, 0.5])
    assert mover.position_at(10.0) == pytest.approx([0.0, 2.0])
    assert mover.velocity_at(10.0) == pytest.approx([0.0, 0.0])


def test_looping_mover():
    mover = Mover([[0.0, 0.0], [1.0, 0.0]], speed=1.0, loop=True)
    assert mover.path_length == pytest.approx(2.0)
    assert mover.position_at(1.5) == pytest.approx([0.5, 0.0])
    assert mover.position_at(2.25) == pytest.approx([0.25, 0.0])


@pytest.mark.parametrize("kwargs", [{"waypoints": np.zeros((0, 2)), "speed": 1.0},
                                    {"waypoints": [[0.0, 0.0]], "speed": -1.0}])
def test_mover_validation(kwargs):
    with pytest.raises(ValueError):
        Mover(**kwargs)


def lift(world, ticks):
    for _ in range(ticks):
        world = tick(world, (0.0, 0.0), "Lifting")
    return world


def test_aligned_fork_grasps_and_carries():
    robot = docking_pose_from_trolley(TROLLEY, ForkModel().dock_standoff)
    world = lift(World(robot=robot, trolley=TROLLEY), 25)
    assert world.attached
    assert world.fork_length == pytest.approx(0.2)

    for _ in range(10):
        world = tick(world, (0.5, 0.0))
    assert world.robot.distance_to(robot) == pytest.approx(0.5)
    offset = world.robot.inverse().compose(world.trolley)
    assert offset.as_array() == pytest.approx([0.4, 0.0, 0.0], abs=1e-9)


def test_attached_fork_stalls_in_grasp_band():
    robot = docking_pose_from_trolley(TROLLEY, ForkModel().dock_standoff)
    world = World(robot=robot, trolley=TROLLEY)
    params = ManipulatorParams()
    state = ManipulatorState().drive_to(0.35)
    modes = []
    for _ in range(40):
        world = tick(world, (0.0, 0.0), "Lifting")
        state = manipulator_update(state, "Lifting", world.fork_length, params)
        modes.append(state.mode)
        if state.mode != Mode.LIFTING:
            break
    assert state.mode == Mode.GRASPED
    assert world.attached
    assert params.in_grasp_band(world.fork_length)
    assert Mode.AT_POSITION not in modes

    world = lift(world, 20)
    assert world.fork_length == pytest.approx(0.2)


def test_misaligned_fork_blocks():
    dock = docking_pose_from_trolley(TROLLEY, ForkModel().dock_standoff)
    robot = Pose2(dock.x, dock.y, dock.theta + 0.3)
    world = lift(World(robot=robot, trolley=TROLLEY), 25)
    assert not world.attached
    assert world.fork_length == pytest.approx(0.08)


def test_fork_without_trolley_tops_out():
    world = lift(World(robot=Pose2(-5.0, 0.0, 0.0), trolley=TROLLEY), 50)
    assert not world.attached
    assert world.fork_length == pytest.approx(0.35)
    world = tick(world, (0.0, 0.0), "Lowering")
    assert world.fork_length == pytest.approx(0.34)


def test_unknown_fork_command():
    with pytest.raises(ValueError):
        tick(World(robot=Pose2(), trolley=TROLLEY), (0.0, 0.0), "Spin")


def test_world_from_scenario():
    world = World.from_settings(ScenarioSettings("demo_fig8"), seed=7)
    assert world.seed == 7
    assert world.trolley.as_array() == pytest.approx([6.5, 0.3, 0.1])
    tracks = world.obstacle_tracks()
    assert len(tracks) == 4
    assert all(isinstance(track, Obstacle) for track in tracks)
    assert tracks[-1].center == pytest.approx([3.0, -4.5])
