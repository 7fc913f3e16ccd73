import csv
import json

import pytest

from pbdr.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SIMULATION,
    build_parser,
    flags_to_keys,
    main,
    parse_config,
    resolve_config,
)
from pbdr.config_reasons import ConfigError


def echoed(out):
    with open(out / "config.json") as stream:
        return json.load(stream)


def test_defaults_of_the_pushed_box_are_echoed(tmp_path):
    run = parse_config(["--out", str(tmp_path), "run-test", "--test", "1"])

    config = echoed(tmp_path)
    assert run.tests == (1,)
    assert config["command"] == "run-test"
    assert config["test"] == 1
    assert config["solver"] == "pbdr"
    assert config["seeds"] == [0, 1, 2]
    assert config["test.force"] == 17.0
    assert config["test.mu"] == 0.4
    assert config["test.n_per_axis"] == 4
    assert config["solver.substeps"] == 10
    assert config["solver.solver_iterations"] == 10
    assert config["solver.precision"] == "single"
    assert config["solver.momentum_fix_schedule"] == "per_iteration"


def test_flags_reach_the_solver_configuration(tmp_path):
    run = parse_config(
        [
            "run-test",
            "--test",
            "3",
            "--precision",
            "double",
            "--velocity-update",
            "legacy",
            "--out",
            str(tmp_path),
        ]
    )

    config = echoed(tmp_path)
    assert config["solver.precision"] == "double"
    assert config["solver.velocity_update"] == "legacy"
    assert run.solver_config().velocity_update == "legacy"
    assert run.test_spec(3).slope == pytest.approx(0.39269908)


def test_flags_before_the_command_are_kept():
    arguments = build_parser().parse_args(["--frames", "7", "run-test", "--test", "2"])

    keys = flags_to_keys(arguments)

    assert keys["frames"] == 7
    assert keys["test"] == 2
    assert keys["command"] == "run-test"


def test_packing_flags_go_to_the_packing():
    arguments = build_parser().parse_args(["pack", "--n-per-axis", "3", "--radius", "0.01"])

    keys = flags_to_keys(arguments)

    assert keys["pack.n_per_axis"] == 3
    assert keys["pack.radius"] == 0.01
    assert "test.n_per_axis" not in keys


def test_negative_friction_is_reported_by_key():
    with pytest.raises(ConfigError) as info:
        resolve_config({"command": "run-test", "test": 1, "test.mu": -0.1})

    assert info.value.keys == ["test.mu"]
    assert "-0.1" in str(info.value)


def test_unknown_keys_get_suggestions():
    with pytest.raises(ConfigError) as info:
        resolve_config({"command": "run-test", "test": 1, "solver.substep": 5})

    assert info.value.keys == ["solver.substep"]
    assert "Did you mean 'solver.substeps'?" in str(info.value)
    assert "solver.jitter" not in str(info.value)


def test_unknown_keys_without_a_close_match():
    with pytest.raises(ConfigError) as info:
        resolve_config({"command": "run-test", "test": 1, "colour": "red"})

    assert info.value.keys == ["colour"]
    assert "Did you mean" not in str(info.value)


def test_type_mismatches_are_reported_together():
    with pytest.raises(ConfigError) as info:
        resolve_config(
            {"command": "run-test", "test": "one", "solver.substeps": "ten"}
        )

    assert info.value.keys == ["test", "solver.substeps"]
    assert "type mismatch for key 'solver.substeps'" in str(info.value)


def test_integers_are_accepted_for_floats():
    run = resolve_config({"command": "run-test", "test": 1, "test.force": 20})

    assert run.test_spec(1).force == 20.0


@pytest.mark.parametrize(
    "keys, key",
    [
        ({"command": "run-test"}, "test"),
        ({"command": "resolution", "test": 1}, "test"),
        ({"command": "run-test", "test": 1, "workers": 0}, "workers"),
        ({"command": "pack", "pack.radius": -1.0}, "pack.radius"),
        ({"command": "run-test", "test": 1, "solver.substeps": 0}, "solver.substeps"),
    ],
)
def test_invalid_values(keys, key):
    with pytest.raises(ConfigError) as info:
        resolve_config(keys)

    assert key in info.value.keys


def test_a_command_is_required():
    with pytest.raises(ConfigError) as info:
        resolve_config({"test": 1})

    assert info.value.keys == ["command"]


def test_missing_bunny_mesh(monkeypatch, tmp_path):
    monkeypatch.setenv("PBDR_MESH_DIR", str(tmp_path))

    with pytest.raises(ConfigError) as info:
        resolve_config({"command": "run-test", "test": 4})

    assert info.value.keys == ["test.mesh"]
    assert "PBDR_MESH_DIR" in str(info.value)


def test_all_skips_the_bunny_without_a_mesh(monkeypatch, tmp_path):
    monkeypatch.setenv("PBDR_MESH_DIR", str(tmp_path))

    run = resolve_config({"command": "all"})

    assert run.tests == (1, 2, 3, 7)
    assert run.skipped == (4, 5, 6)
    assert run.variants == ("pbd", "pbdr")


def test_configuration_file_and_flag_precedence(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "command": "run-test",
                "test": 1,
                "seeds": [5],
                "test.mu": 0.3,
                "solver.precision": "double",
            }
        )
    )

    run = parse_config(["--config", str(path), "--mu", "0.5", "--out", str(tmp_path / "out")])

    assert run.seeds == (5,)
    assert run.test_spec(1).mu == 0.5
    assert run.solver_config().precision == "double"


@pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
def test_broken_configuration_files(tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(content)

    with pytest.raises(ConfigError) as info:
        parse_config(["--config", str(path)])

    assert info.value.keys == ["config"]


def test_main_writes_a_box_packing(tmp_path, capsys):
    assert main(["pack", "--out", str(tmp_path)]) == EXIT_OK

    with open(tmp_path / "packing.csv", newline="") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["cx", "cy", "cz", "radius"]
    assert len(rows) == 65
    assert "box: 64 spheres" in capsys.readouterr().out


def test_main_packs_a_mesh(tmp_path, cube_obj):
    out = tmp_path / "out"

    code = main(["pack", "--shape", "bunny", "--mesh", str(cube_obj), "--radius", "0.025", "--out", str(out)])

    assert code == EXIT_OK
    assert "64 spheres" in (out / "summary.txt").read_text()


def test_main_runs_a_short_test(tmp_path):
    code = main(
        ["run-test", "--test", "1", "--frames", "2", "--seeds", "0", "--out", str(tmp_path)]
    )

    assert code == EXIT_OK
    assert (tmp_path / "trajectory_test1_pbdr_seed0.csv").is_file()
    with open(tmp_path / "summary.csv", newline="") as stream:
        rows = list(csv.reader(stream))
    assert len(rows) == 2
    assert "Test 1 (pushed box), pbdr" in (tmp_path / "summary.txt").read_text()


def test_main_reports_configuration_errors(tmp_path, capsys):
    assert main(["run-test", "--out", str(tmp_path)]) == EXIT_CONFIG

    assert "ConfigError" in capsys.readouterr().err
    assert not (tmp_path / "config.json").exists()


def test_main_reports_simulation_failures(tmp_path, capsys):
    code = main(
        [
            "run-test",
            "--test",
            "2",
            "--n-per-axis",
            "1",
            "--frames",
            "2",
            "--seeds",
            "0",
            "--out",
            str(tmp_path),
        ]
    )

    assert code == EXIT_SIMULATION
    assert "InvalidMomentError" in capsys.readouterr().err
    summary = (tmp_path / "summary.txt").read_text()
    assert summary.startswith("FAILED: InvalidMomentError")
    assert (tmp_path / "config.json").is_file()


def test_main_reports_a_force_pusher_past_the_limit_surface(tmp_path, capsys):
    code = main(
        [
            "run-test",
            "--test",
            "7",
            "--pusher-mode",
            "force",
            "--force",
            "100",
            "--frames",
            "2",
            "--seeds",
            "0",
            "--out",
            str(tmp_path),
        ]
    )

    assert code == EXIT_SIMULATION
    assert "PushOutsideLimitSurfaceError" in capsys.readouterr().err
    summary = (tmp_path / "summary.txt").read_text()
    assert summary.startswith("FAILED: PushOutsideLimitSurfaceError")


def test_push_offset_and_reference_resolution_flags():
    arguments = build_parser().parse_args(
        ["run-test", "--test", "7", "--push-offset", "0.5", "--reference-resolution", "0.004"]
    )

    keys = flags_to_keys(arguments)

    assert keys["test.push_offset"] == 0.5
    assert keys["test.reference_resolution"] == 0.004
    assert resolve_config(keys).test_spec(7).push_offset == 0.5


def test_rod_push_summary_names_the_pusher(tmp_path):
    code = main(
        ["run-test", "--test", "7", "--frames", "2", "--seeds", "0", "--out", str(tmp_path)]
    )

    assert code == EXIT_OK
    assert "Test 7 drives the rod at 0.02 m/s" in (tmp_path / "summary.txt").read_text()
