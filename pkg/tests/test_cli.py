import os
import warnings

import numpy as np
import pytest
from click.testing import CliRunner

from trollector import RESOURCE_DIR, io
from trollector.cli.cli import entry
from trollector.cli import run as run_cli


@pytest.fixture
def runner():
    return CliRunner()


def resource(name):
    return os.path.join(RESOURCE_DIR, name)


def test_help_lists_command_groups(runner):
    result = runner.invoke(entry, ["--help"])
    assert result.exit_code == 0
    for section in ["Mission", "Debugging", "Utilities"]:
        assert section in result.output
    for command in ["run", "batch", "verify", "solve-once", "fit-plane", "pnp", "calibrate"]:
        assert command in result.output


def test_run_module_compiles_without_escape_warnings():
    with open(run_cli.__file__) as src:
        source = src.read()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        compile(source, run_cli.__file__, "exec")


@pytest.mark.parametrize("command,first_line", [
    ("run", "$ trollector run \\"),
    ("batch", "$ trollector batch \\"),
])
def test_usage_examples_keep_line_continuations(runner, command, first_line):
    result = runner.invoke(entry, [command, "--help"])
    assert result.exit_code == 0
    lines = [line.strip() for line in result.output.splitlines()]
    assert first_line in lines
    start = lines.index(first_line)
    assert lines[start + 1].startswith("--") and lines[start + 1].endswith("\\")


def test_fit_plane(runner, tmp_path):
    out = str(tmp_path.joinpath("plane.json"))
    result = runner.invoke(entry, ["fit-plane", resource("plane_z1.xyz"), "-o", out])
    assert result.exit_code == 0, result.output
    plane = io.load_json(out)
    coeffs = np.array([plane["a"], plane["b"], plane["c"], plane["d"]])
    coeffs *= np.sign(coeffs[2])
    assert coeffs == pytest.approx([0.0, 0.0, 1.0, -1.0], abs=1e-9)
    assert plane["inliers"] == plane["points"] == 500
    # A horizontal plane cannot be a backplane.
    assert plane["pose"] is None


def test_pnp_identity(runner, tmp_path):
    out = str(tmp_path.joinpath("pose.json"))
    result = runner.invoke(entry, ["pnp", resource("pnp_identity.json"), "-o", out])
    assert result.exit_code == 0, result.output
    pose = io.load_json(out)
    assert np.allclose(pose["rotation"], np.eye(3), atol=1e-6)
    assert np.allclose(pose["translation"], np.zeros(3), atol=1e-6)
    assert pose["refined"]


def test_pnp_with_too_few_points(runner, tmp_path):
    obj = io.load_json(resource("pnp_identity.json"))
    obj["visibility"] = [True, True, True, False, False, False]
    path = str(tmp_path.joinpath("three.json"))
    io.write_json(obj, path)
    result = runner.invoke(entry, ["pnp", path])
    assert result.exit_code == 1
    assert "DegenerateConfiguration" in result.output


def test_solve_once_then_verify(runner, tmp_path):
    out = str(tmp_path.joinpath("solution.json"))
    result = runner.invoke(entry, ["solve-once", resource("obstacle_between.json"), "-o", out])
    assert result.exit_code == 0, result.output
    solution = io.load_json(out)
    assert "solve_time" not in solution
    assert len(solution["controls"]) == 30

    result = runner.invoke(entry, ["verify", out])
    assert result.exit_code == 0, result.output
    assert "0 violation(s)" in result.output


def test_solve_once_is_deterministic(runner, tmp_path):
    outputs = []
    for name in ["a.json", "b.json"]:
        out = tmp_path.joinpath(name)
        runner.invoke(entry, ["solve-once", resource("obstacle_between.json"), "-o", str(out)])
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_verify_flags_violation(runner, tmp_path):
    out = str(tmp_path.joinpath("solution.json"))
    runner.invoke(entry, ["solve-once", resource("obstacle_between.json"), "-o", out])
    solution = io.load_json(out)
    solution["states"][10] = [1.6, 0.05, 0.0]
    io.write_json(solution, out)
    result = runner.invoke(entry, ["verify", out])
    assert result.exit_code == 3


def test_malformed_scenario(runner, tmp_path):
    path = tmp_path.joinpath("broken.yaml")
    path.write_text("General:\n  Run:\n    Settings: [1, 2\n")
    result = runner.invoke(entry, ["run", "-s", str(path), "-o", str(tmp_path.joinpath("out"))])
    assert result.exit_code == 1
    assert "broken.yaml:" in result.output
    assert not tmp_path.joinpath("out").exists()


def test_missing_scenario(runner, tmp_path):
    result = runner.invoke(entry, ["run", "-s", "no_such_scenario", "-o", str(tmp_path)])
    assert result.exit_code == 1
    assert "Scenario not found" in result.output


def test_spawn_inside_obstacle_exit_code(runner, tmp_path):
    out = tmp_path.joinpath("spawn")
    result = runner.invoke(entry, ["run", "-s", "spawn_in_obstacle", "-o", str(out)])
    assert result.exit_code == 2
    assert "InfeasibleStart" in result.output
    assert io.load_json(str(out.joinpath("metrics.json")))["outcome"] == "Aborted"


def test_run_tick_limit(runner, tmp_path):
    out = tmp_path.joinpath("short")
    result = runner.invoke(entry, ["run", "--ticks-max", "5", "-o", str(out), "--verify"])
    assert result.exit_code == 2
    assert "TickLimit" in result.output
    assert io.load_json(str(out.joinpath("metrics.json")))["verify"]["ok"]


def test_calibrate_lidar(runner, tmp_path):
    out = str(tmp_path.joinpath("lidar.json"))
    result = runner.invoke(entry, ["calibrate", "lidar", "-n", "10", "-r", "1", "-o", out])
    assert result.exit_code == 0, result.output
    calib = io.load_json(out)
    assert calib["sensor"] == "lidar"
    assert set(calib["knobs"]) == {"jitter_translation", "jitter_yaw"}
    assert calib["validation"]["frames"] + calib["validation"]["failures"] == 10
