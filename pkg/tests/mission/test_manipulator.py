import pytest

from trollector.mission.manipulator import (
    Mode, ForkCommand, ManipulatorParams, ManipulatorState, manipulator_update
)


PARAMS = ManipulatorParams()


def lift_until_stall(length, ticks):
    state = ManipulatorState().drive_to(0.35)
    state = manipulator_update(state, ForkCommand.LIFTING, length, PARAMS)
    for _ in range(ticks):
        state = manipulator_update(state, ForkCommand.LIFTING, length, PARAMS)
    return state


def test_drive_to_sets_direction():
    state = ManipulatorState(l=0.1)
    assert state.drive_to(0.35).mode == Mode.LIFTING
    assert state.drive_to(0.0).mode == Mode.LOWERING
    assert state.drive_to(0.35).target == 0.35


def test_moving_fork():
    state = ManipulatorState().drive_to(0.35)
    state = manipulator_update(state, ForkCommand.LIFTING, 0.01, PARAMS)
    assert state.mode == Mode.LIFTING
    assert state.delta_l == pytest.approx(0.01)
    assert state.stall_count == 0


def test_reaches_target():
    state = ManipulatorState(l=0.34).drive_to(0.35)
    state = manipulator_update(state, ForkCommand.LIFTING, 0.349, PARAMS)
    assert state.mode == Mode.AT_POSITION


def test_stall_in_grasp_band_is_grasp():
    assert lift_until_stall(0.2, PARAMS.stall_ticks - 1).mode == Mode.LIFTING
    state = lift_until_stall(0.2, PARAMS.stall_ticks)
    assert state.mode == Mode.GRASPED
    assert state.stall_count == PARAMS.stall_ticks


@pytest.mark.parametrize("length", [0.08, 0.3])
def test_stall_outside_band_is_block(length):
    assert lift_until_stall(length, PARAMS.stall_ticks).mode == Mode.BLOCKED


def test_stall_while_lowering_is_block():
    state = ManipulatorState(l=0.2).drive_to(0.0)
    for _ in range(PARAMS.stall_ticks):
        state = manipulator_update(state, ForkCommand.LOWERING, 0.2, PARAMS)
    assert state.mode == Mode.BLOCKED


def test_hold_keeps_mode():
    state = ManipulatorState(l=0.2, mode=Mode.GRASPED, target=0.35)
    state = manipulator_update(state, "Hold", 0.2, PARAMS)
    assert state.mode == Mode.GRASPED
    assert state.stall_count == 0


def test_movement_resets_stall_count():
    state = lift_until_stall(0.1, PARAMS.stall_ticks - 2)
    assert state.stall_count > 0
    state = manipulator_update(state, ForkCommand.LIFTING, 0.11, PARAMS)
    assert state.stall_count == 0


def test_negative_length():
    with pytest.raises(ValueError):
        manipulator_update(ManipulatorState(), ForkCommand.LIFTING, -0.01, PARAMS)
    with pytest.raises(ValueError):
        ManipulatorState(l=-1.0)


def test_params_from_settings():
    from trollector.setting_loaders import ScenarioSettings

    params = ManipulatorParams.from_settings(ScenarioSettings().mission)
    assert params.in_grasp_band(0.2)
    assert not params.in_grasp_band(0.35)
