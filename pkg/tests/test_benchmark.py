import csv

import numpy as np
import pytest

from pbdr.benchmark import (
    InvalidMomentError,
    measure_runtime,
    run_ablation,
    run_resolution_study,
    run_sweep,
    run_test,
)
from pbdr.benchmark.metrics import position_error, rotation_error, seed_statistics, time_mean
from pbdr.benchmark.reports import (
    SUMMARY_HEADER,
    TRAJECTORY_HEADER,
    write_ablation,
    write_resolution,
    write_runtime,
    write_summary,
    write_sweep,
    write_trajectory,
)
from pbdr.benchmark.scenes import (
    build_scene,
    moment_about_z,
    object_packing,
    reference_moment,
    resolve_mesh_path,
)
from pbdr.benchmark.studies import inertia_relative_error, variant_config
from pbdr.config import SolverConfig, default_test_spec
from pbdr.math3d import Rotation


def read_rows(path):
    with open(path, newline="") as stream:
        return list(csv.reader(stream))


def test_pushed_box_scene():
    bench = build_scene(default_test_spec(1), SolverConfig(jitter=0.0))

    assert len(bench.packing) == 64
    assert len(bench.scene.bodies) == 1
    np.testing.assert_allclose(bench.initial_com, [0.0, 0.0, 0.1], atol=1e-12)
    np.testing.assert_allclose(bench.scene.loads[0].force, [17.0, 0.0, 0.0])
    assert bench.scene.particles.positions.dtype == np.float32
    assert bench.scene.plane.friction == 0.4


def test_slope_scene_rests_on_the_incline():
    bench = build_scene(default_test_spec(3), SolverConfig(precision="double", jitter=0.0))
    plane = bench.scene.plane
    state = bench.scene.particles

    gaps = plane.signed_distance(state.positions) - state.radii
    assert gaps.min() == pytest.approx(0.0, abs=1e-12)
    assert bench.direction[0] > 0.0 and bench.direction[2] < 0.0
    assert bench.direction @ plane.normal == pytest.approx(0.0, abs=1e-12)


def test_torque_scene_uses_the_solid_moment():
    bench = build_scene(default_test_spec(2), SolverConfig())

    assert bench.moment == pytest.approx(4.0 * 0.08 / 12.0)
    np.testing.assert_allclose(bench.scene.loads[0].torque, [0.0, 0.0, 0.01])


def test_single_sphere_cannot_be_spun():
    with pytest.raises(InvalidMomentError):
        build_scene(default_test_spec(2, n_per_axis=1), SolverConfig())


def test_rod_scene_touches_the_box():
    bench = build_scene(default_test_spec(7), SolverConfig(precision="double", jitter=0.0))
    box, rod = bench.scene.bodies
    positions = bench.scene.particles.positions

    assert rod.kinematic and rod.name == "rod"
    tip = positions[rod.slice][:, 0].max() + 0.02
    assert tip == pytest.approx(positions[box.slice][:, 0].min() - 0.025)
    assert bench.push.in_contact
    np.testing.assert_allclose(bench.scene.particles.velocities[rod.slice], [[0.02, 0.0, 0.0]] * rod.size)


def test_short_pushed_box_run():
    result = run_test(default_test_spec(1, frames=5, seeds=(0,)), SolverConfig())

    run = result.runs[0]
    assert result.solver_variant == "pbdr"
    assert [frame.frame for frame in run.frames] == list(range(6))
    assert run.frames[0].pos_err < 1e-5
    assert run.final_pos_err < 1e-3
    assert run.wall_ms > 0.0
    summary = result.summary()
    assert summary["final_pos_err"] == (run.final_pos_err, 0.0)


def test_box_pushed_below_the_friction_limit_does_not_creep():
    # mu * M * g = 15.7 N
    spec = default_test_spec(1, force=10.0, frames=50, seeds=(0,))

    run = run_test(spec, SolverConfig()).runs[0]

    assert run.frames[-1].ref_com[0] == run.frames[0].ref_com[0]
    assert run.final_pos_err <= 1e-4


def test_runs_are_deterministic():
    spec = default_test_spec(1, frames=5, seeds=(3,))

    first = run_test(spec, SolverConfig()).runs[0]
    second = run_test(spec, SolverConfig()).runs[0]

    for a, b in zip(first.frames, second.frames):
        np.testing.assert_array_equal(a.com, b.com)
        assert a.pos_err == b.pos_err
        assert a.rot_err_deg == b.rot_err_deg


def test_seeds_run_in_worker_processes():
    spec = default_test_spec(2, frames=2, seeds=(1, 0))

    result = run_test(spec, SolverConfig.for_solver("pbd"), workers=2)

    assert [run.seed for run in result.runs] == [0, 1]
    assert result.solver_variant == "pbd"
    assert all(np.isfinite(run.final_rot_err) for run in result.runs)


def test_rod_push_reference_starts_at_the_box():
    result = run_test(default_test_spec(7, frames=3, seeds=(0,)), SolverConfig())

    first = result.runs[0].frames[0]
    assert first.body == 0
    assert first.pos_err < 1e-5
    assert first.ref_angle_deg == 0.0


def test_metrics():
    assert position_error([1.0, 2.0, 2.0], np.zeros(3)) == 3.0
    assert time_mean([100.0, 1.0, 3.0]) == 2.0
    assert seed_statistics([1.0, 3.0]) == (2.0, 1.0)
    turned = Rotation.from_axis_angle((0.0, 0.0, 1.0), np.radians(10.0))
    assert rotation_error(1, turned, 0.0, 0.0) == pytest.approx(10.0)
    assert rotation_error(2, turned, 4 * np.pi, 2 * np.pi) == pytest.approx(360.0)


def test_variant_config_keeps_the_other_settings():
    base = SolverConfig(substeps=5, precision="double")

    pbd = variant_config(base, "pbd")

    assert pbd.substeps == 5 and pbd.precision == "double"
    assert pbd.variant_name == "pbd"


def test_tiny_sweep(tmp_path):
    sweep = run_sweep(frictions=(0.4,), forces=(17.0, 20.0), frames=2)

    assert sweep.position["pbd"].shape == (1, 2)
    assert np.all(np.isfinite(sweep.position["pbdr"]))
    assert sweep.failures == []
    assert isinstance(sweep.dominance_violations(), list)

    paths = write_sweep(tmp_path, sweep)
    assert sorted(path.name for path in paths) == [
        "sweep_pbd_pos.csv",
        "sweep_pbd_rot.csv",
        "sweep_pbdr_pos.csv",
        "sweep_pbdr_rot.csv",
    ]
    rows = read_rows(tmp_path / "sweep_pbd_pos.csv")
    assert rows[0] == ["mu\\F", "17", "20"]
    assert rows[1][0] == "0.4"


def test_sweep_needs_cells():
    with pytest.raises(ValueError):
        run_sweep(frictions=(), forces=(17.0,))


def test_ablation_rows(tmp_path):
    rows = run_ablation(frames=3)

    assert [row.ablation for row in rows] == ["full"] * 5 + [
        "velocity_update",
        "velocity_update",
        "linear_momentum",
        "linear_momentum",
        "angular_momentum",
        "angular_momentum",
    ]
    assert all(row.ratio == 1.0 for row in rows[:5])

    write_ablation(tmp_path / "ablation.csv", rows)
    assert read_rows(tmp_path / "ablation.csv")[0] == ["ablation", "metric", "t2", "t10", "mean", "ratio"]


def test_box_resolution_study(tmp_path):
    rows = run_resolution_study(2, (2, 3), frames=2, seeds=(0,))

    assert [row.spheres for row in rows] == [8, 27]
    assert rows[0].inertia_error == pytest.approx(0.25)
    assert rows[1].inertia_error < rows[0].inertia_error

    write_resolution(tmp_path / "resolution.csv", rows)
    assert read_rows(tmp_path / "resolution.csv")[1][:3] == ["2", "2", "8"]


def test_resolution_study_rejects_other_tests():
    with pytest.raises(ValueError):
        run_resolution_study(1, (2, 3))


def test_box_inertia_error_shrinks_with_resolution():
    errors = [
        inertia_relative_error(default_test_spec(2, n_per_axis=n)) for n in (2, 4, 8)
    ]

    assert errors == sorted(errors, reverse=True)


def test_runtime_rows(tmp_path):
    rows = measure_runtime((2,), frames=2)

    assert rows[0].spheres == 8
    assert rows[0].wall_s > 0.0

    write_runtime(tmp_path / "runtime.csv", rows)
    assert read_rows(tmp_path / "runtime.csv")[1][:3] == ["2", "8", "2"]


def test_trajectory_and_summary_files(tmp_path):
    result = run_test(default_test_spec(1, frames=2, seeds=(0,)), SolverConfig())

    write_trajectory(tmp_path / "trajectory.csv", result.runs[0])
    write_summary(tmp_path / "summary.csv", [result])

    trajectory = read_rows(tmp_path / "trajectory.csv")
    assert trajectory[0] == TRAJECTORY_HEADER
    assert len(trajectory) == 4
    summary = read_rows(tmp_path / "summary.csv")
    assert summary[0] == SUMMARY_HEADER
    assert summary[1][:3] == ["1", "pbdr", "0"]


def test_bunny_scene(bunny_mesh):
    bench = build_scene(default_test_spec(4, mesh=str(bunny_mesh)), SolverConfig())

    assert bench.info["mesh_sha256"]
    assert 0.9 * 2175 <= len(bench.packing) <= 1.1 * 2175


def test_missing_mesh_path_uses_the_mesh_directory(monkeypatch, tmp_path):
    monkeypatch.setenv("PBDR_MESH_DIR", str(tmp_path))

    assert resolve_mesh_path(None) == tmp_path / "bunny.obj"
    assert resolve_mesh_path("/abs/other.obj").name == "other.obj"


def test_mesh_reference_moment_uses_the_finest_packing(cube_obj):
    spec = default_test_spec(5, mesh=str(cube_obj), bunny_radius=0.025)
    coarse = object_packing(spec)
    fine = object_packing(spec, radius=0.005)

    assert len(coarse) == 64
    assert reference_moment(spec, coarse) == moment_about_z(fine, spec.mass)
    assert reference_moment(spec, coarse) != moment_about_z(coarse, spec.mass)


def test_mesh_reference_moment_can_be_pinned(cube_obj):
    spec = default_test_spec(
        5, mesh=str(cube_obj), bunny_radius=0.025, reference_resolution=0.025
    )
    coarse = object_packing(spec)

    assert reference_moment(spec, coarse) == moment_about_z(coarse, spec.mass)
