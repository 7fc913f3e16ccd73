"""Full-length physics runs against the analytic references. Run with --runslow."""

import itertools
import math

import numpy as np
import pytest

from pbdr.benchmark import (
    measure_runtime,
    run_ablation,
    run_resolution_study,
    run_sweep,
    run_test,
)
from pbdr.benchmark.scenes import build_scene
from pbdr.benchmark.studies import BOX_RESOLUTIONS, runtime_slope
from pbdr.body import compute_momentum
from pbdr.config import SolverConfig, default_test_spec
from pbdr.geometry.packing import pack_box
from pbdr.scene import SceneBuilder
from pbdr.solver import Simulation, step

pytestmark = pytest.mark.slow


def test_momentum_is_conserved_by_the_revised_solver():
    rest = pack_box((0.1, 0.1, 0.1), 4).centers
    builder = SceneBuilder(np.float32)
    builder.add_body(rest, 0.025, 4.0)
    scene = builder.build()
    spin = np.array([0.3, -0.2, 1.0])
    scene.particles.velocities[...] = np.cross(spin, rest) + [0.5, 0.1, 0.0]
    config = SolverConfig(gravity=0.0)
    body = scene.bodies[0]

    previous = compute_momentum(body, scene.particles)
    for _ in range(10_000):
        step(scene, config)
        current = compute_momentum(body, scene.particles)
        linear_scale = max(1.0, float(np.linalg.norm(previous.linear)))
        angular_scale = max(1.0, float(np.linalg.norm(previous.angular)))
        assert np.linalg.norm(current.linear - previous.linear) <= 1e-6 * linear_scale
        assert np.linalg.norm(current.angular - previous.angular) <= 1e-6 * angular_scale
        previous = current

    positions = scene.particles.positions.astype(np.float64)
    for i, j in itertools.combinations(range(len(rest)), 2):
        rest_distance = np.linalg.norm(rest[i] - rest[j])
        distance = np.linalg.norm(positions[i] - positions[j])
        assert abs(distance - rest_distance) <= 1e-4 * rest_distance


def test_velocity_updates_agree_in_double_precision():
    spec = default_test_spec(1)
    trajectories = []
    for mode in ("legacy", "incremental"):
        config = SolverConfig.for_solver("pbd", precision="double", velocity_update=mode)
        scene = build_scene(spec, config, seed=0).scene
        for _ in range(100):
            step(scene, config)
        trajectories.append(scene.particles.positions.copy())

    legacy, incremental = trajectories
    assert np.abs(legacy - incremental).max() <= 1e-7 * np.abs(legacy).max()


def test_pushed_box_tracks_the_reference():
    spec = default_test_spec(1, seeds=(0,))

    revised = run_test(spec, SolverConfig.for_solver("pbdr")).runs[0]
    original = run_test(spec, SolverConfig.for_solver("pbd")).runs[0]

    assert revised.frames[-1].ref_com[0] == pytest.approx(16.30, abs=5e-3)
    assert revised.final_pos_err <= 0.05
    assert revised.final_pos_err <= 0.01 * original.final_pos_err


def test_resting_box_stays_put():
    run = run_test(default_test_spec(1, force=0.0, seeds=(0,)), SolverConfig()).runs[0]

    assert run.final_pos_err <= 1e-3
    assert max(frame.rot_err_deg for frame in run.frames) <= 0.5


@pytest.mark.parametrize("force", [5.0, 10.0, 15.0])
def test_box_below_the_friction_limit_stays_put(force):
    spec = default_test_spec(1, force=force, seeds=(0,))

    run = run_test(spec, SolverConfig()).runs[0]

    assert run.frames[-1].ref_com[0] == run.frames[0].ref_com[0]
    assert run.final_pos_err <= 1e-3


def test_box_slides_down_the_slope():
    run = run_test(default_test_spec(3, seeds=(0,)), SolverConfig()).runs[0]

    travelled = np.linalg.norm(run.frames[-1].com - run.frames[0].com)
    assert travelled == pytest.approx(6.44, rel=0.03)


def test_box_holds_at_the_friction_angle():
    spec = default_test_spec(3, slope=math.atan(0.4), seeds=(0,))

    run = run_test(spec, SolverConfig()).runs[0]

    assert np.linalg.norm(run.frames[-1].com - run.frames[0].com) <= 1e-3


def test_contacts_do_not_sink():
    spec = default_test_spec(1)
    bench = build_scene(spec, SolverConfig())
    state = bench.scene.particles
    depths = []

    def record(sample):
        gaps = bench.scene.plane.signed_distance(state.positions) - state.radii
        depths.append(float(-gaps.min()))

    simulation = Simulation(bench.scene, SolverConfig())
    simulation.add_hook(record)
    simulation.run(200)

    assert max(depths) <= 0.1 * float(state.radii.max())


def test_ablated_components_cost_orders_of_magnitude():
    rows = run_ablation()
    full = {row.metric: row for row in rows if row.ablation == "full"}

    for row in rows:
        if row.ablation == "full":
            continue
        assert row.t10 >= 100.0 * full[row.metric].t10
        assert row.t10 > row.t2


def test_box_errors_shrink_with_resolution():
    rotation = run_resolution_study(2, BOX_RESOLUTIONS, seeds=(0,))
    final = [row.final_error for row in rotation]
    inertia = [row.inertia_error for row in rotation]

    assert final == sorted(final, reverse=True)
    assert inertia == sorted(inertia, reverse=True)

    coarse, fine = run_resolution_study(7, (3, 10), seeds=(0,))
    assert fine.final_error < coarse.final_error


def test_revised_solver_dominates_the_sweep():
    sweep = run_sweep(workers=4)

    assert sweep.failures == []
    assert sweep.dominance_violations() == []


def test_centered_push_does_not_turn():
    run = run_test(default_test_spec(7, push_offset=0.0, seeds=(0,)), SolverConfig()).runs[0]

    assert all(frame.ref_angle_deg == 0.0 for frame in run.frames)
    assert max(frame.rot_err_deg for frame in run.frames) <= 0.5


def test_runtime_grows_superlinearly():
    rows = measure_runtime((4, 8, 16), frames=20)

    assert [row.spheres for row in rows] == [64, 512, 4096]
    assert runtime_slope(rows) >= 1.0
