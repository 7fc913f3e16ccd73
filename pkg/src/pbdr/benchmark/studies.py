"""Parameter sweeps, resolution studies, ablations and self-timing."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import itertools
import logging
import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from pbdr.benchmark.metrics import time_mean
from pbdr.benchmark.runner import SeedRun, run_test
from pbdr.benchmark.scenes import build_scene, load_mesh, object_packing, resolve_mesh_path
from pbdr.body import Body
from pbdr.config import FRAMES, SolverConfig, SolverVariant, TestSpec, default_test_spec
from pbdr.geometry.mesh import mesh_inertia, solid_box_inertia
from pbdr.solver import Simulation

logger = logging.getLogger(__name__)

SWEEP_FRICTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
SWEEP_FORCES = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
BOX_RESOLUTIONS = (2, 3, 4, 6, 8, 10)
RUNTIME_RESOLUTIONS = (4, 8, 16)
DOMINANCE_TOLERANCE = 1e-4

_VARIANT_FLAGS = {"velocity_update", "linear_momentum_fix", "angular_momentum_fix"}


def variant_config(base: SolverConfig, variant: SolverVariant) -> SolverConfig:
    """`base` with the variant flags of solver `variant`."""
    return SolverConfig.for_solver(variant, **base.model_dump(exclude=_VARIANT_FLAGS))


@dataclass(frozen=True, eq=False)
class SweepResult:
    frictions: Tuple[float, ...]
    forces: Tuple[float, ...]
    position: Dict[str, npt.NDArray[np.float64]]
    rotation: Dict[str, npt.NDArray[np.float64]]
    failures: List[Tuple[str, float, float, str]] = field(default_factory=list)

    def dominance_violations(
        self,
        better: str = "pbdr",
        worse: str = "pbd",
        tolerance: float = DOMINANCE_TOLERANCE,
    ) -> List[Tuple[float, float]]:
        """Cells (mu, F) where `better` has a larger final position error than `worse`."""
        excess = self.position[better] - self.position[worse]
        rows, columns = np.nonzero(excess > tolerance)
        return [(self.frictions[i], self.forces[j]) for i, j in zip(rows, columns)]


def _sweep_cell(
    variant: SolverVariant,
    mu: float,
    force: float,
    base: SolverConfig,
    frames: int,
    seed: int,
) -> Tuple[float, float, Optional[str]]:
    spec = default_test_spec(1, mu=mu, force=force, frames=frames, seeds=(seed,))
    try:
        result = run_test(spec, variant_config(base, variant))
    except Exception as e:
        return math.nan, math.nan, f"{e.__class__.__name__}: {e}"
    run = result.runs[0]
    return run.final_pos_err, run.final_rot_err, None


def run_sweep(
    frictions: Sequence[float] = SWEEP_FRICTIONS,
    forces: Sequence[float] = SWEEP_FORCES,
    solvers: Sequence[SolverVariant] = ("pbd", "pbdr"),
    base: Optional[SolverConfig] = None,
    frames: int = FRAMES,
    seed: int = 0,
    workers: int = 1,
) -> SweepResult:
    """Final errors of the pushed box for every (mu, F) cell and solver.

    A failing cell is recorded as NaN and listed in `failures`.
    """
    if not frictions or not forces:
        raise ValueError("The sweep grids must not be empty.")
    base = base if base is not None else SolverConfig()
    cells = list(itertools.product(solvers, frictions, forces))
    arguments = [
        (variant, mu, force, base, frames, seed) for variant, mu, force in cells
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, *zip(*arguments)))
    else:
        outcomes = [_sweep_cell(*args) for args in arguments]

    shape = (len(frictions), len(forces))
    position = {variant: np.full(shape, np.nan) for variant in solvers}
    rotation = {variant: np.full(shape, np.nan) for variant in solvers}
    failures = []
    for (variant, mu, force), (pos, rot, error) in zip(cells, outcomes):
        i, j = list(frictions).index(mu), list(forces).index(force)
        position[variant][i, j] = pos
        rotation[variant][i, j] = rot
        if error is not None:
            logger.warning("Sweep cell %s mu=%g F=%g failed: %s", variant, mu, force, error)
            failures.append((variant, mu, force, error))
    return SweepResult(
        frictions=tuple(frictions),
        forces=tuple(forces),
        position=position,
        rotation=rotation,
        failures=failures,
    )


@dataclass(frozen=True)
class ResolutionRow:
    test_id: int
    resolution: float
    spheres: int
    final_error: float
    mean_error: float
    inertia_error: float


def inertia_relative_error(spec: TestSpec, radius: Optional[float] = None) -> float:
    """Frobenius relative error of the packing's inertia against the solid object's."""
    packing = object_packing(spec, radius=radius)
    particles = Body.from_rest_positions(packing.centers, spec.mass).rest_inertia
    if spec.obj == "bunny":
        _, continuous = mesh_inertia(
            load_mesh(str(resolve_mesh_path(spec.mesh))), spec.mass
        )
    else:
        continuous = solid_box_inertia(spec.mass, spec.half_extents)
    return float(np.linalg.norm(particles - continuous) / np.linalg.norm(continuous))


def run_resolution_study(
    test_id: int,
    resolutions: Sequence[float],
    config: Optional[SolverConfig] = None,
    workers: int = 1,
    **overrides,
) -> List[ResolutionRow]:
    """Error against sphere count: rotation for tests 2 and 5, position for test 7.

    Box resolutions are spheres per axis, bunny resolutions are sphere radii.
    """
    if test_id not in (2, 5, 7):
        raise ValueError(f"Resolution studies cover tests 2, 5 and 7, not {test_id}")
    if not resolutions:
        raise ValueError("At least one resolution is needed.")
    config = config if config is not None else SolverConfig()
    rows = []
    for resolution in resolutions:
        if test_id == 5:
            spec = default_test_spec(
                5,
                bunny_radius=float(resolution),
                reference_resolution=float(min(resolutions)),
                **overrides,
            )
            spheres = len(object_packing(spec))
            inertia_error = inertia_relative_error(spec)
        else:
            spec = default_test_spec(test_id, n_per_axis=int(resolution), **overrides)
            spheres = int(resolution) ** 3
            inertia_error = inertia_relative_error(spec)
        logger.info("Test %d at resolution %g: %d spheres", test_id, resolution, spheres)
        result = run_test(spec, config, workers=workers)
        summary = result.summary()
        metric = "pos" if test_id == 7 else "rot"
        rows.append(
            ResolutionRow(
                test_id=test_id,
                resolution=float(resolution),
                spheres=spheres,
                final_error=summary[f"final_{metric}_err"][0],
                mean_error=summary[f"mean_{metric}_err"][0],
                inertia_error=inertia_error,
            )
        )
    return rows


# component -> (flag overrides removing it, headline metrics)
ABLATIONS: Dict[str, Tuple[Dict[str, str], Tuple[str, str]]] = {
    "velocity_update": ({"velocity_update": "legacy"}, ("pos_err", "vel_err")),
    "linear_momentum": ({"linear_momentum_fix": "off"}, ("pos_err", "lin_err")),
    "angular_momentum": ({"angular_momentum_fix": "off"}, ("rot_err_deg", "ang_err")),
}


@dataclass(frozen=True)
class AblationRow:
    ablation: str
    metric: str
    t2: float
    t10: float
    mean: float
    ratio: float


def _series_at(values: npt.NDArray[np.float64], frame_time: float, t: float) -> float:
    return float(values[min(len(values) - 1, int(round(t / frame_time)))])


def _ablation_rows(
    name: str,
    run: SeedRun,
    metrics: Sequence[str],
    frame_time: float,
    reference: Optional[SeedRun] = None,
) -> List[AblationRow]:
    rows = []
    for metric in metrics:
        values = run.series(metric)
        mean = time_mean(values)
        if reference is None:
            ratio = 1.0
        else:
            full_mean = time_mean(reference.series(metric))
            ratio = mean / full_mean if full_mean > 0.0 else math.inf
        rows.append(
            AblationRow(
                ablation=name,
                metric=metric,
                t2=_series_at(values, frame_time, 2.0),
                t10=_series_at(values, frame_time, 10.0),
                mean=mean,
                ratio=ratio,
            )
        )
    return rows


def run_ablation(
    config: Optional[SolverConfig] = None,
    frames: int = FRAMES,
    seed: int = 0,
    workers: int = 1,
) -> List[AblationRow]:
    """Removes one component of the revised solver at a time on the pushed box.

    The "full" rows hold the complete solver's errors; every other row's ratio is
    its time-averaged error over the complete solver's.
    """
    base = variant_config(config if config is not None else SolverConfig(), "pbdr")
    spec = default_test_spec(1, frames=frames, seeds=(seed,))
    variants = {"full": base}
    for name, (flags, _) in ABLATIONS.items():
        variants[name] = base.model_copy(update=flags)
    names = list(variants)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(run_test, itertools.repeat(spec), [variants[n] for n in names])
            )
    else:
        results = [run_test(spec, variants[name]) for name in names]
    runs = {name: result.runs[0] for name, result in zip(names, results)}

    rows = []
    all_metrics = ("pos_err", "vel_err", "lin_err", "rot_err_deg", "ang_err")
    rows += _ablation_rows("full", runs["full"], all_metrics, base.frame_time)
    for name, (_, metrics) in ABLATIONS.items():
        rows += _ablation_rows(name, runs[name], metrics, base.frame_time, runs["full"])
    return rows


@dataclass(frozen=True)
class RuntimeRow:
    n_per_axis: int
    spheres: int
    frames: int
    wall_s: float


def measure_runtime(
    resolutions: Sequence[int] = RUNTIME_RESOLUTIONS,
    frames: int = 100,
    config: Optional[SolverConfig] = None,
) -> List[RuntimeRow]:
    """Wall time of a box resting on the ground for each resolution."""
    config = config if config is not None else SolverConfig()
    rows = []
    for n in resolutions:
        spec = default_test_spec(1, force=0.0, n_per_axis=int(n), frames=frames, seeds=(0,))
        bench = build_scene(spec, config, seed=0)
        simulation = Simulation(bench.scene, config)
        started = time.perf_counter()
        simulation.run(frames)
        wall = time.perf_counter() - started
        logger.info("%d spheres, %d frames: %.3f s", len(bench.packing), frames, wall)
        rows.append(RuntimeRow(int(n), len(bench.packing), frames, wall))
    return rows


def runtime_slope(rows: Sequence[RuntimeRow]) -> float:
    """Slope of log wall time against log sphere count."""
    if len(rows) < 2:
        return math.nan
    spheres = np.log([row.spheres for row in rows])
    walls = np.log([max(row.wall_s, 1e-9) for row in rows])
    return float(np.polyfit(spheres, walls, 1)[0])
