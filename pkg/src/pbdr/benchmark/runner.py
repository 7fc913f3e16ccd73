"""Run one benchmark test against its analytic reference, over a list of seeds."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import itertools
import logging
import math
import time
from typing import Any, Dict, List, Optional

import numpy as np
import numpy.typing as npt

from pbdr.benchmark.metrics import (
    position_error,
    rotation_error,
    seed_statistics,
    time_mean,
)
from pbdr.benchmark.oracles import (
    oracle_rotation,
    oracle_rotation_rate,
    oracle_slope,
    oracle_slope_velocity,
    oracle_translation,
    oracle_translation_velocity,
)
from pbdr.benchmark.pushing import (
    PushOutsideLimitSurfaceError,
    integrate_push,
    is_static_under_push,
)
from pbdr.benchmark.scenes import TARGET_BODY, BenchmarkScene, build_scene
from pbdr.config import SolverConfig, TestSpec
from pbdr.math3d import AngleUnwrapper, Rotation, Vec3
from pbdr.solver import Simulation, SimulationError, TrajectorySample

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrajectoryFrame:
    frame: int
    t: float
    body: int
    com: Vec3
    orientation: Rotation
    linear: Vec3
    angular: Vec3
    ref_com: Vec3
    ref_angle_deg: float
    pos_err: float
    rot_err_deg: float
    vel_err: float
    lin_err: float
    ang_err: float


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """Reference com, angle about z, com velocity and spin rate at each frame."""

    com: npt.NDArray[np.float64]
    angle: npt.NDArray[np.float64]
    velocity: npt.NDArray[np.float64]
    angular_rate: npt.NDArray[np.float64]
    contact_lost_at: Optional[float] = None


def reference_trajectory(
    bench: BenchmarkScene, config: SolverConfig, frames: int
) -> ReferenceTrajectory:
    spec = bench.spec
    g = config.gravity
    times = np.arange(frames + 1) * config.frame_time
    zeros = np.zeros(frames + 1)
    com = np.tile(bench.initial_com, (frames + 1, 1))
    velocity = np.zeros((frames + 1, 3))
    angle, rate = zeros.copy(), zeros.copy()
    lost = None
    if spec.test_id in (1, 4):
        load = (spec.force, spec.mu, spec.mass, g)
        distance = np.array([oracle_translation(*load, t) for t in times])
        speed = np.array([oracle_translation_velocity(*load, t) for t in times])
        com += np.outer(distance, bench.direction)
        velocity = np.outer(speed, bench.direction)
    elif spec.test_id in (3, 6):
        distance = np.array([oracle_slope(spec.slope, spec.mu, g, t) for t in times])
        speed = np.array(
            [oracle_slope_velocity(spec.slope, spec.mu, g, t) for t in times]
        )
        com += np.outer(distance, bench.direction)
        velocity = np.outer(speed, bench.direction)
    elif spec.test_id in (2, 5):
        angle = np.array([oracle_rotation(spec.torque, bench.moment, t) for t in times])
        rate = np.array(
            [oracle_rotation_rate(spec.torque, bench.moment, t) for t in times]
        )
    elif spec.test_id == 7:
        if spec.pusher_mode == "force":
            if not is_static_under_push(bench.push, spec.force):
                raise PushOutsideLimitSurfaceError(
                    f"A pusher force of {spec.force} N leaves the limit surface, the"
                    " quasi-static reference does not apply; use the velocity pusher."
                )
        else:
            states = integrate_push(bench.push, frames, config.frame_time)
            com[:, 0] += [state.x for state in states]
            com[:, 1] += [state.y for state in states]
            angle = np.array([state.theta for state in states])
            velocity = np.gradient(com, config.frame_time, axis=0)
            rate = np.gradient(angle, config.frame_time)
            lost = next((s.time for s in states if not s.in_contact), None)
    return ReferenceTrajectory(
        com=com, angle=angle, velocity=velocity, angular_rate=rate, contact_lost_at=lost
    )


@dataclass(frozen=True, eq=False)
class SeedRun:
    seed: int
    frames: List[TrajectoryFrame]
    wall_ms: float
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def final_pos_err(self) -> float:
        return self.frames[-1].pos_err

    @property
    def final_rot_err(self) -> float:
        return self.frames[-1].rot_err_deg

    @property
    def mean_pos_err(self) -> float:
        return time_mean([frame.pos_err for frame in self.frames])

    @property
    def mean_rot_err(self) -> float:
        return time_mean([frame.rot_err_deg for frame in self.frames])

    def series(self, metric: str) -> npt.NDArray[np.float64]:
        return np.array([getattr(frame, metric) for frame in self.frames])


@dataclass(frozen=True, eq=False)
class RunResult:
    spec: TestSpec
    config: SolverConfig
    runs: List[SeedRun]

    @property
    def solver_variant(self) -> str:
        return self.config.variant_name

    def summary(self) -> Dict[str, tuple]:
        """(mean, std) over seeds of the final and time-averaged errors."""
        metrics = (
            "final_pos_err",
            "final_rot_err",
            "mean_pos_err",
            "mean_rot_err",
            "wall_ms",
        )
        return {
            metric: seed_statistics([getattr(run, metric) for run in self.runs])
            for metric in metrics
        }


class _Recorder:
    """Trajectory hook turning the measured body's samples into TrajectoryFrames."""

    def __init__(self, bench: BenchmarkScene, reference: ReferenceTrajectory):
        self.bench = bench
        self.reference = reference
        self.unwrapper = AngleUnwrapper((0.0, 0.0, 1.0))
        self.mass = bench.scene.bodies[TARGET_BODY].total_mass
        self.frames: List[TrajectoryFrame] = []

    def __call__(self, sample: TrajectorySample) -> None:
        if sample.body != TARGET_BODY:
            return
        k = sample.frame
        reference = self.reference
        spec = self.bench.spec
        angle = self.unwrapper.update(sample.orientation)
        ref_angle = float(reference.angle[k])
        expected_linear = self.mass * reference.velocity[k]
        expected_angular = np.zeros(3)
        if self.bench.moment is not None:
            expected_angular[2] = self.bench.moment * reference.angular_rate[k]
        self.frames.append(
            TrajectoryFrame(
                frame=k,
                t=sample.t,
                body=sample.body,
                com=sample.com,
                orientation=sample.orientation,
                linear=sample.linear,
                angular=sample.angular,
                ref_com=reference.com[k],
                ref_angle_deg=math.degrees(ref_angle),
                pos_err=position_error(sample.com, reference.com[k]),
                rot_err_deg=rotation_error(
                    spec.test_id, sample.orientation, angle, ref_angle
                ),
                vel_err=position_error(sample.linear / self.mass, reference.velocity[k]),
                lin_err=position_error(sample.linear, expected_linear),
                ang_err=position_error(sample.angular, expected_angular),
            )
        )


def run_seed(spec: TestSpec, config: SolverConfig, seed: int) -> SeedRun:
    bench = build_scene(spec, config, seed)
    reference = reference_trajectory(bench, config, spec.frames)
    recorder = _Recorder(bench, reference)
    simulation = Simulation(bench.scene, config)
    simulation.add_hook(recorder)
    info = dict(bench.info)
    if reference.contact_lost_at is not None:
        info["contact_lost_at"] = reference.contact_lost_at
    started = time.perf_counter()
    try:
        simulation.run(spec.frames)
    except SimulationError as e:
        e.partial = SeedRun(seed, recorder.frames, 1e3 * simulation.wall_time, info)
        raise
    logger.info(
        "Test %d, %s, seed %d: %d frames in %.2f s",
        spec.test_id,
        config.variant_name,
        seed,
        spec.frames,
        time.perf_counter() - started,
    )
    return SeedRun(seed, recorder.frames, 1e3 * simulation.wall_time, info)


def run_test(spec: TestSpec, config: SolverConfig, workers: int = 1) -> RunResult:
    """Runs every seed of `spec`, in worker processes when `workers` > 1."""
    seeds = list(spec.seeds)
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            runs = list(
                pool.map(run_seed, itertools.repeat(spec), itertools.repeat(config), seeds)
            )
    else:
        runs = [run_seed(spec, config, seed) for seed in seeds]
    runs.sort(key=lambda run: run.seed)
    result = RunResult(spec=spec, config=config, runs=runs)
    summary = result.summary()
    logger.info(
        "Test %d (%s), %s: final position error %.4g m, final rotation error %.4g deg"
        " over %d seed(s)",
        spec.test_id,
        spec.name,
        config.variant_name,
        summary["final_pos_err"][0],
        summary["final_rot_err"][0],
        len(runs),
    )
    return result
