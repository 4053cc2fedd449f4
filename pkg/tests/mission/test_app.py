from dataclasses import replace

import numpy as np
import pytest

from trollector.geometry import Pose2
from trollector.setting_loaders import ScenarioSettings
from trollector.planner.barriers import Obstacle
from trollector.perception.filters import FilteredTarget
from trollector.mission.manipulator import Mode, ManipulatorState
from trollector.mission.app import Stage, Command, MissionParams, MissionState, step_mission, approach_goal
from trollector.sim.sensors import SensorBundle


@pytest.fixture(scope="module")
def params():
    return MissionParams.from_settings(ScenarioSettings())


def bundle(robot=Pose2(), obstacles=(), fork_length=0.0, time=0.0):
    return SensorBundle(time=time, robot_pose=robot, obstacles=tuple(obstacles), fork_length=fork_length)


def test_searches_until_first_detection(params):
    ms, command = step_mission(MissionState(), bundle(), params)
    assert ms.stage == Stage.APPROACH
    assert command == Command(0.0, params.search_rate)
    assert ms.tick_count == 1
    assert ms.stage_ticks == 1
    assert not ms.target.initialized


def test_approach_plans_around_trolley_body(params):
    ms = MissionState(target=FilteredTarget(pose=Pose2(4.0, 0.0, 0.0)))
    ms, command = step_mission(ms, bundle(), params)
    assert ms.stage == Stage.APPROACH
    assert ms.goal.as_array() == pytest.approx([2.5, 0.0, 0.0])
    assert command.v > 0
    info = ms.last_step
    assert info.solution is not None
    assert len(info.problem.barriers) == 1
    assert ms.warm_start is not None


def test_switches_to_dock_at_standoff(params):
    trolley = Pose2(4.0, 0.0, 0.0)
    ms = MissionState(target=FilteredTarget(pose=trolley), stage_ticks=12)
    ms, command = step_mission(ms, bundle(robot=approach_goal(trolley, params.approach_standoff)), params)
    assert ms.stage == Stage.DOCK
    assert ms.last_step.transition == "Approach -> Dock"
    assert ms.stage_ticks == 0
    assert ms.goal.as_array() == pytest.approx([3.6, 0.0, 0.0])
    assert command == Command()


def test_dock_falls_back_when_trolley_is_far(params):
    ms = MissionState(stage=Stage.DOCK, target=FilteredTarget(pose=Pose2(5.0, 0.0, 0.0)))
    ms, _ = step_mission(ms, bundle(), params)
    assert ms.stage == Stage.APPROACH
    assert ms.goal.as_array() == pytest.approx([3.5, 0.0, 0.0])


def test_dock_settles_before_capture(params):
    trolley = Pose2(4.0, 0.0, 0.0)
    dock = Pose2(3.6, 0.0, 0.0)
    ms = MissionState(stage=Stage.DOCK, target=FilteredTarget(pose=trolley))
    for _ in range(params.capture_settle_ticks - 1):
        ms, command = step_mission(ms, bundle(robot=dock), params)
        assert ms.stage == Stage.DOCK
        assert command == Command()
    ms, command = step_mission(ms, bundle(robot=dock), params)
    assert ms.stage == Stage.CAPTURE
    assert command.fork == "Lifting"
    assert ms.manipulator.target == params.lift_target


def test_spawn_inside_obstacle_aborts(params):
    obstacle = Obstacle([0.3, 0.1], radius=0.2)
    ms, command = step_mission(MissionState(), bundle(obstacles=[obstacle]), params)
    assert ms.stage == Stage.ABORTED
    assert ms.abort_reason.startswith("InfeasibleStart")
    assert command == Command()


def test_tick_budget_aborts(params):
    tight = replace(params, tick_budgets={**params.tick_budgets, Stage.APPROACH: 3})
    ms = MissionState()
    for _ in range(3):
        ms, _ = step_mission(ms, bundle(), tight)
        assert ms.stage == Stage.APPROACH
    ms, _ = step_mission(ms, bundle(), tight)
    assert ms.stage == Stage.ABORTED
    assert ms.abort_reason.startswith("TickBudget")


def capture_state(mode, length, target=0.35, blocked=0):
    return MissionState(
        stage=Stage.CAPTURE,
        manipulator=ManipulatorState(l=length, mode=mode, target=target),
        blocked_count=blocked,
    )


def test_grasp_starts_return(params):
    ms, command = step_mission(capture_state(Mode.GRASPED, 0.2), bundle(fork_length=0.2), params)
    assert ms.stage == Stage.RETURN
    assert ms.goal == params.return_spot
    assert command.fork == "Hold"


def test_first_block_lowers_the_fork(params):
    ms, command = step_mission(capture_state(Mode.BLOCKED, 0.08), bundle(fork_length=0.08), params)
    assert ms.stage == Stage.CAPTURE
    assert ms.blocked_count == 1
    assert command == Command(fork="Lowering")
    assert ms.manipulator.target == 0.0


def test_lowered_fork_lifts_again(params):
    ms, command = step_mission(capture_state(Mode.AT_POSITION, 0.0, target=0.0, blocked=1),
                               bundle(fork_length=0.0), params)
    assert ms.stage == Stage.CAPTURE
    assert command.fork == "Lifting"


def test_second_block_aborts(params):
    ms, _ = step_mission(capture_state(Mode.BLOCKED, 0.08, blocked=1), bundle(fork_length=0.08), params)
    assert ms.stage == Stage.ABORTED
    assert ms.abort_reason.startswith("Blocked")


def test_lift_without_trolley_aborts(params):
    ms, _ = step_mission(capture_state(Mode.AT_POSITION, 0.35), bundle(fork_length=0.35), params)
    assert ms.stage == Stage.ABORTED
    assert ms.abort_reason.startswith("NoGrasp")


def test_return_finishes_at_spot(params):
    ms = MissionState(stage=Stage.RETURN, goal=params.return_spot)
    ms, command = step_mission(ms, bundle(robot=Pose2(0.05, 0.0, np.pi)), params)
    assert ms.stage == Stage.DONE
    assert ms.finished
    assert command == Command()


def test_finished_mission_stays_put(params):
    ms = MissionState(stage=Stage.DONE)
    new_ms, command = step_mission(ms, bundle(robot=Pose2(3.0, 3.0, 0.0)), params)
    assert new_ms.stage == Stage.DONE
    assert new_ms.tick_count == ms.tick_count
    assert command == Command()


def test_standoffs_are_ordered(params):
    with pytest.raises(ValueError):
        replace(params, approach_standoff=0.3)
