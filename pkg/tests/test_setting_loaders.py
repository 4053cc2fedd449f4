import pytest

from trollector.setting_loaders import ScenarioSettings, resolve_scenario_path, load_scenario_document
from trollector.exceptions import ConfigurationError


def test_default_settings():
    settings = ScenarioSettings()
    assert settings.source is None
    assert settings.run.dt == 0.1
    assert settings.planner.horizon == 20
    assert settings.planner.terminal_weight == [10.0, 10.0, 2.0]
    assert settings.mission.approach_standoff == 1.5
    assert len(settings.camera.keypoint_template) == 6


def test_shipped_scenario_by_name():
    settings = ScenarioSettings("demo_fig8")
    assert settings.source.endswith("demo_fig8.yaml")
    assert settings.world.trolley == [6.5, 0.3, 0.1]
    assert len(settings.world.obstacles) == 3
    assert settings.world.movers[0]["Speed"] == 0.45
    # Keys the scenario leaves out keep their defaults.
    assert settings.planner.slack_weight == 1000.0


def test_partial_override(tmp_path):
    path = tmp_path.joinpath("seeded.yaml")
    path.write_text("General:\n  Run:\n    Settings:\n      Seed:\n        Value: 42\n")
    settings = ScenarioSettings(str(path))
    assert settings.run.seed == 42
    assert settings.run.ticks_max == 3000


def test_json_scenario(tmp_path):
    path = tmp_path.joinpath("scenario.json")
    path.write_text('{"General": {"Planner": {"Settings": {"Horizon": {"Value": 12}}}}}')
    assert ScenarioSettings(str(path)).planner.horizon == 12


def test_malformed_yaml_is_line_anchored(tmp_path):
    path = tmp_path.joinpath("broken.yaml")
    path.write_text("General:\n  Run:\n    Settings: [unclosed\n")
    with pytest.raises(ConfigurationError) as err:
        load_scenario_document(str(path))
    message = str(err.value)
    assert message.startswith(f"{path}:")
    line, col = message[len(str(path)) + 1:].split(":")[:2]
    assert int(line) >= 3 and int(col) >= 1


def test_malformed_json_is_line_anchored(tmp_path):
    path = tmp_path.joinpath("broken.json")
    path.write_text('{\n  "General": {,\n}\n')
    with pytest.raises(ConfigurationError, match=r"broken\.json:2:\d+:"):
        load_scenario_document(str(path))


def test_schema_violation(tmp_path):
    path = tmp_path.joinpath("bad_type.yaml")
    path.write_text("General:\n  Run:\n    Settings:\n      Seed:\n        Value: not-a-number\n")
    with pytest.raises(ConfigurationError, match="Seed"):
        ScenarioSettings(str(path))


def test_unknown_key_rejected(tmp_path):
    path = tmp_path.joinpath("typo.yaml")
    path.write_text("General:\n  Run:\n    Settings:\n      Sead:\n        Value: 1\n")
    with pytest.raises(ConfigurationError):
        ScenarioSettings(str(path))


def test_missing_scenario():
    with pytest.raises(ConfigurationError, match="not found"):
        resolve_scenario_path("no_such_scenario")


def test_top_level_must_be_mapping(tmp_path):
    path = tmp_path.joinpath("list.yaml")
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError, match=":1:1:"):
        load_scenario_document(str(path))
