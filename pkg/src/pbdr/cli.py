"""Command-line entry point: resolve a configuration, run a benchmark, write CSVs."""

import argparse
import json
import logging
import os
from pathlib import Path
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from pbdr.benchmark.oracles import InvalidMomentError
from pbdr.benchmark.pushing import ContactLostError, PushOutsideLimitSurfaceError
from pbdr.benchmark.reports import (
    write_ablation,
    write_resolution,
    write_runtime,
    write_summary,
    write_sweep,
    write_trajectory,
)
from pbdr.benchmark.runner import RunResult, SeedRun, run_test
from pbdr.benchmark.scenes import load_mesh, resolve_mesh_path
from pbdr.benchmark.studies import (
    BOX_RESOLUTIONS,
    RUNTIME_RESOLUTIONS,
    SWEEP_FORCES,
    SWEEP_FRICTIONS,
    measure_runtime,
    run_ablation,
    run_resolution_study,
    run_sweep,
    runtime_slope,
)
from pbdr.config import (
    BOX_HALF_EXTENT,
    BOX_N_PER_AXIS,
    BUNNY_RADIUS,
    ROD_LENGTH,
    ROD_RADIUS,
    SEEDS,
    SolverConfig,
    SolverVariant,
    TestSpec,
    default_test_spec,
    expected_object,
)
from pbdr.config_reasons import (
    ConfigError,
    ConfigReason,
    FullConfigReason,
    MissingFile,
    OutOfRange,
    UnknownKey,
    check_value,
    out_of_range_reasons,
)
from pbdr.display import format_real, format_statistic
from pbdr.geometry.mesh import MeshFormatError
from pbdr.geometry.packing import EmptyPackingError, pack_box, pack_mesh, pack_rod
from pbdr.math3d import DegenerateConfigurationError, RankDeficientError
from pbdr.solver import SimulationError

logger = logging.getLogger(__name__)

Command = Literal["run-test", "sweep", "resolution", "ablate", "pack", "runtime", "all"]
PackShape = Literal["box", "bunny", "rod"]

COMMANDS: Tuple[str, ...] = Command.__args__  # type: ignore[attr-defined]
LOG_LEVEL_VARIABLE = "PBDR_LOG_LEVEL"
BUNNY_TESTS = (4, 5, 6)
RESOLUTION_TESTS = (2, 5, 7)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_IO = 4

# keys of TestSpec that are selected by the run rather than overridden
_RUN_OWNED_TEST_FIELDS = {"test_id", "obj", "seeds", "frames"}

RUN_KEYS: Dict[str, object] = {
    "command": Command,
    "test": int,
    "solver": SolverVariant,
    "seeds": Tuple[int, ...],
    "frames": int,
    "out": str,
    "workers": int,
    "sweep.mu": Tuple[float, ...],
    "sweep.force": Tuple[float, ...],
    "resolution.values": Tuple[float, ...],
    "runtime.n_per_axis": Tuple[int, ...],
    "pack.shape": PackShape,
    "pack.radius": float,
    "pack.n_per_axis": int,
    "pack.mesh": str,
}


def key_hints() -> Dict[str, object]:
    """Type hint of every flat configuration key."""
    hints = dict(RUN_KEYS)
    for name, info in SolverConfig.model_fields.items():
        hints[f"solver.{name}"] = info.annotation
    for name, info in TestSpec.model_fields.items():
        if name not in _RUN_OWNED_TEST_FIELDS:
            hints[f"test.{name}"] = info.annotation
    return hints


class RunConfig(BaseModel):
    """A fully resolved and validated invocation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    tests: Tuple[int, ...] = ()
    variants: Tuple[SolverVariant, ...] = ("pbdr",)
    solver_overrides: Dict[str, Any] = Field(default_factory=dict)
    test_overrides: Dict[str, Any] = Field(default_factory=dict)
    seeds: Tuple[int, ...] = Field(SEEDS, min_length=1)
    frames: Optional[int] = Field(None, ge=1)
    out: str = "out"
    workers: int = Field(1, ge=1)
    sweep_mu: Tuple[float, ...] = SWEEP_FRICTIONS
    sweep_force: Tuple[float, ...] = SWEEP_FORCES
    resolutions: Tuple[float, ...] = ()
    runtime_n_per_axis: Tuple[int, ...] = RUNTIME_RESOLUTIONS
    pack_shape: PackShape = "box"
    pack_radius: Optional[float] = Field(None, gt=0.0)
    pack_n_per_axis: int = Field(BOX_N_PER_AXIS, ge=1)
    pack_mesh: Optional[str] = None
    skipped: Tuple[int, ...] = ()
    flat: Dict[str, Any] = Field(default_factory=dict)

    def solver_config(self, variant: Optional[SolverVariant] = None) -> SolverConfig:
        return SolverConfig.for_solver(
            variant or self.variants[0], **self.solver_overrides
        )

    def test_spec(self, test_id: int) -> TestSpec:
        overrides: Dict[str, Any] = dict(self.test_overrides, seeds=self.seeds)
        if self.frames is not None:
            overrides["frames"] = self.frames
        return default_test_spec(test_id, **overrides)


_RUN_FIELD_KEYS = {
    "sweep_mu": "sweep.mu",
    "sweep_force": "sweep.force",
    "resolutions": "resolution.values",
    "runtime_n_per_axis": "runtime.n_per_axis",
    "pack_shape": "pack.shape",
    "pack_radius": "pack.radius",
    "pack_n_per_axis": "pack.n_per_axis",
    "pack_mesh": "pack.mesh",
}


def _common_parser(suppress: bool = False) -> argparse.ArgumentParser:
    """Flags accepted both before and after the subcommand.

    The subcommand copy suppresses its defaults so it does not overwrite flags
    given before the subcommand.
    """
    common = argparse.ArgumentParser(
        add_help=False, argument_default=argparse.SUPPRESS if suppress else None
    )
    common.add_argument("--config", help="JSON file of flat dotted configuration keys")
    common.add_argument("--test", type=int, help="benchmark test number, 1 to 7")
    common.add_argument("--solver", choices=["pbd", "pbdr"])
    common.add_argument("--frames", type=int)
    common.add_argument("--seeds", type=int, nargs="+")
    common.add_argument("--mu", type=float)
    common.add_argument("--force", type=float)
    common.add_argument("--torque", type=float)
    common.add_argument("--slope", type=float)
    common.add_argument("--n-per-axis", type=int)
    common.add_argument("--mesh")
    common.add_argument("--radius", type=float)
    common.add_argument("--precision", choices=["single", "double"])
    common.add_argument("--velocity-update", choices=["legacy", "incremental"])
    common.add_argument("--linear-momentum", choices=["on", "off"])
    common.add_argument("--angular-momentum", choices=["on", "off"])
    common.add_argument("--schedule", choices=["per_iteration", "per_substep"])
    common.add_argument(
        "--pusher-mode",
        choices=["velocity", "force"],
        help=(
            "Test 7 pusher. velocity (default) drives the rod at test.push_speed;"
            " force pushes with test.force and is only valid while the box stays"
            " static"
        ),
    )
    common.add_argument(
        "--push-offset",
        type=float,
        help="Test 7 contact point along the pushed face, -1 to 1 of the half extent",
    )
    common.add_argument(
        "--reference-resolution",
        type=float,
        help="sphere radius of the bunny packing giving the reference moment of inertia",
    )
    common.add_argument("--workers", type=int)
    common.add_argument("--out")
    common.add_argument(
        "--log-level",
        default=(
            argparse.SUPPRESS
            if suppress
            else os.environ.get(LOG_LEVEL_VARIABLE, "WARNING")
        ),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbdr",
        description="Analytic physics benchmark for particle rigid-body solvers.",
        parents=[_common_parser()],
    )
    common = _common_parser(suppress=True)
    commands = parser.add_subparsers(dest="command")
    commands.add_parser("run-test", parents=[common], help="one test, one solver")
    sweep = commands.add_parser("sweep", parents=[common], help="Test 1 over (mu, F)")
    sweep.add_argument("--sweep-mu", type=float, nargs="+")
    sweep.add_argument("--sweep-force", type=float, nargs="+")
    resolution = commands.add_parser(
        "resolution", parents=[common], help="error against sphere count"
    )
    resolution.add_argument("--values", type=float, nargs="+")
    commands.add_parser("ablate", parents=[common], help="remove one component at a time")
    pack = commands.add_parser("pack", parents=[common], help="write a sphere packing")
    pack.add_argument("--shape", choices=["box", "bunny", "rod"])
    runtime = commands.add_parser("runtime", parents=[common], help="time the solver")
    runtime.add_argument("--n", type=int, nargs="+", dest="runtime_n")
    commands.add_parser("all", parents=[common], help="every test with both solvers")
    return parser


def flags_to_keys(
    arguments: argparse.Namespace, command: Optional[str] = None
) -> Dict[str, Any]:
    """Flat configuration keys set on the command line.

    `--n-per-axis`, `--mesh` and `--radius` describe the packing for `pack` and the
    measured object otherwise.
    """
    packing = (arguments.command or command) == "pack"
    mapping = {
        "command": "command",
        "test": "test",
        "solver": "solver",
        "frames": "frames",
        "seeds": "seeds",
        "workers": "workers",
        "out": "out",
        "mu": "test.mu",
        "force": "test.force",
        "torque": "test.torque",
        "slope": "test.slope",
        "n_per_axis": "pack.n_per_axis" if packing else "test.n_per_axis",
        "mesh": "pack.mesh" if packing else "test.mesh",
        "radius": "pack.radius" if packing else "test.bunny_radius",
        "precision": "solver.precision",
        "velocity_update": "solver.velocity_update",
        "linear_momentum": "solver.linear_momentum_fix",
        "angular_momentum": "solver.angular_momentum_fix",
        "schedule": "solver.momentum_fix_schedule",
        "pusher_mode": "test.pusher_mode",
        "push_offset": "test.push_offset",
        "reference_resolution": "test.reference_resolution",
        "sweep_mu": "sweep.mu",
        "sweep_force": "sweep.force",
        "values": "resolution.values",
        "runtime_n": "runtime.n_per_axis",
        "shape": "pack.shape",
    }
    keys = {}
    for attribute, key in mapping.items():
        value = getattr(arguments, attribute, None)
        if value is not None:
            keys[key] = tuple(value) if isinstance(value, list) else value
    return keys


def _as_hinted(value: Any) -> Any:
    # JSON arrays come in as lists, every sequence key is hinted as a tuple
    if isinstance(value, list):
        return tuple(_as_hinted(item) for item in value)
    return value


def read_config_file(path: str) -> Dict[str, Any]:
    if not Path(path).is_file():
        raise ConfigError(FullConfigReason(path, [MissingFile("config", path)]))
    with open(path) as stream:
        try:
            content = json.load(stream)
        except json.JSONDecodeError as e:
            raise ConfigError(
                FullConfigReason(path, [OutOfRange("config", f"not valid JSON: {e}")])
            )
    if not isinstance(content, dict):
        raise ConfigError(
            FullConfigReason(
                path, [OutOfRange("config", "the top level must be a JSON object")]
            )
        )
    return {key: _as_hinted(value) for key, value in content.items()}


def check_keys(keys: Dict[str, Any]) -> List[ConfigReason]:
    hints = key_hints()
    reasons: List[ConfigReason] = []
    for key, value in keys.items():
        if key not in hints:
            reasons.append(UnknownKey(key, hints))
            continue
        reason = check_value(key, value, hints[key])
        if reason is not None:
            reasons.append(reason)
    return reasons


def _selected_tests(command: str, keys: Dict[str, Any]) -> Tuple[int, ...]:
    if command == "all":
        return tuple(range(1, 8))
    if command in ("sweep", "ablate", "runtime"):
        return (1,)
    if command == "pack":
        return ()
    if "test" in keys:
        return (int(keys["test"]),)
    return (2,) if command == "resolution" else ()


def _mesh_reasons(
    command: str,
    tests: Tuple[int, ...],
    test_overrides: Dict[str, Any],
    pack_shape: str,
    pack_mesh: Optional[str],
) -> Tuple[Tuple[int, ...], List[ConfigReason]]:
    """Tests to skip for a missing bunny mesh, and the errors for an explicit request."""
    needs_mesh = [test for test in tests if test in BUNNY_TESTS]
    if command == "pack" and pack_shape == "bunny":
        path = resolve_mesh_path(pack_mesh)
        if not path.is_file():
            return (), [MissingFile("pack.mesh", str(path), _mesh_hint())]
        return (), []
    if not needs_mesh:
        return (), []
    path = resolve_mesh_path(test_overrides.get("mesh"))
    if path.is_file():
        return (), []
    if command == "all":
        logger.warning(
            "No bunny mesh at %s, skipping tests %s.", path, ", ".join(map(str, needs_mesh))
        )
        return tuple(needs_mesh), []
    return (), [MissingFile("test.mesh", str(path), _mesh_hint())]


def _mesh_hint() -> str:
    return "Relative mesh paths are looked up in $PBDR_MESH_DIR, else the working directory."


def resolve_config(keys: Dict[str, Any], source: str = "the command line") -> RunConfig:
    """Validates flat keys and builds the RunConfig, reporting every problem at once."""
    reasons = check_keys(keys)
    if reasons:
        raise ConfigError(FullConfigReason(source, reasons))
    command = keys.get("command")
    if command is None:
        raise ConfigError(
            FullConfigReason(
                source,
                [OutOfRange("command", "a command is required: " + ", ".join(COMMANDS))],
            )
        )

    solver_overrides = {
        key[len("solver.") :]: value
        for key, value in keys.items()
        if key.startswith("solver.")
    }
    test_overrides = {
        key[len("test.") :]: value for key, value in keys.items() if key.startswith("test.")
    }
    tests = _selected_tests(command, keys)
    if command in ("run-test", "resolution") and not tests:
        reasons.append(OutOfRange("test", f"'{command}' needs a test number", None))
    elif command == "resolution" and tests[0] not in RESOLUTION_TESTS:
        reasons.append(
            OutOfRange("test", "resolution studies cover tests 2, 5 and 7", tests[0])
        )

    try:
        SolverConfig.for_solver(keys.get("solver", "pbdr"), **solver_overrides)
    except ValidationError as e:
        reasons += out_of_range_reasons("solver", e)

    pack_shape = keys.get("pack.shape", "box")
    skipped, mesh_reasons = _mesh_reasons(
        command, tests, test_overrides, pack_shape, keys.get("pack.mesh")
    )
    reasons += mesh_reasons
    tests = tuple(test for test in tests if test not in skipped)

    try:
        run = RunConfig(
            command=command,
            tests=tests,
            variants=_variants(command, keys),
            solver_overrides=solver_overrides,
            test_overrides=test_overrides,
            seeds=keys.get("seeds", SEEDS),
            frames=keys.get("frames"),
            out=keys.get("out", "out"),
            workers=keys.get("workers", 1),
            sweep_mu=keys.get("sweep.mu", SWEEP_FRICTIONS),
            sweep_force=keys.get("sweep.force", SWEEP_FORCES),
            resolutions=keys.get("resolution.values", ()),
            runtime_n_per_axis=keys.get("runtime.n_per_axis", RUNTIME_RESOLUTIONS),
            pack_shape=pack_shape,
            pack_radius=keys.get("pack.radius"),
            pack_n_per_axis=keys.get("pack.n_per_axis", BOX_N_PER_AXIS),
            pack_mesh=keys.get("pack.mesh"),
            skipped=skipped,
        )
    except ValidationError as e:
        reasons += out_of_range_reasons("", e, _RUN_FIELD_KEYS)
        raise ConfigError(FullConfigReason(source, reasons))

    if not mesh_reasons:
        for test in tests:
            try:
                run.test_spec(test)
            except ValidationError as e:
                reasons += out_of_range_reasons("test", e)
            except ValueError as e:
                reasons.append(OutOfRange("test", str(e), test))
    if reasons:
        raise ConfigError(FullConfigReason(source, _unique(reasons)))
    return run.model_copy(update={"flat": resolved_keys(run)})


def _unique(reasons: List[ConfigReason]) -> List[ConfigReason]:
    seen, unique = set(), []
    for reason in reasons:
        message = str(reason)
        if message not in seen:
            seen.add(message)
            unique.append(reason)
    return unique


def _variants(command: str, keys: Dict[str, Any]) -> Tuple[SolverVariant, ...]:
    if "solver" in keys:
        return (keys["solver"],)
    if command in ("all", "sweep"):
        return ("pbd", "pbdr")
    return ("pbdr",)


def resolved_keys(run: RunConfig) -> Dict[str, Any]:
    """Flat keys that reproduce `run`, defaults included."""
    keys: Dict[str, Any] = {
        "command": run.command,
        "seeds": list(run.seeds),
        "out": run.out,
        "workers": run.workers,
    }
    if len(run.variants) == 1:
        keys["solver"] = run.variants[0]
    if run.frames is not None:
        keys["frames"] = run.frames
    if run.command in ("run-test", "resolution") and run.tests:
        keys["test"] = run.tests[0]
    for name, value in run.solver_config().model_dump().items():
        if name in run.solver_overrides or len(run.variants) == 1:
            keys[f"solver.{name}"] = value
    if len(run.tests) == 1:
        spec = run.test_spec(run.tests[0])
        for name, value in spec.model_dump(exclude=_RUN_OWNED_TEST_FIELDS).items():
            keys[f"test.{name}"] = value
    else:
        keys.update({f"test.{name}": value for name, value in run.test_overrides.items()})
    if run.command == "sweep":
        keys["sweep.mu"] = list(run.sweep_mu)
        keys["sweep.force"] = list(run.sweep_force)
    elif run.command == "resolution" and run.resolutions:
        keys["resolution.values"] = list(run.resolutions)
    elif run.command == "runtime":
        keys["runtime.n_per_axis"] = list(run.runtime_n_per_axis)
    elif run.command == "pack":
        keys["pack.shape"] = run.pack_shape
        keys["pack.n_per_axis"] = run.pack_n_per_axis
        if run.pack_radius is not None:
            keys["pack.radius"] = run.pack_radius
        if run.pack_mesh is not None:
            keys["pack.mesh"] = run.pack_mesh
    return keys


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Resolves the configuration file and flags, then echoes it to <out>/config.json."""
    arguments = build_parser().parse_args(argv)
    keys: Dict[str, Any] = {}
    source = "the command line"
    if arguments.config is not None:
        keys.update(read_config_file(arguments.config))
        source = arguments.config
    keys.update(flags_to_keys(arguments, keys.get("command")))
    run = resolve_config(keys, source)
    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as stream:
        json.dump(run.flat, stream, indent=2, sort_keys=True)
        stream.write("\n")
    return run


def _summary_table(results: Sequence[RunResult]) -> List[str]:
    lines = []
    for result in results:
        summary = result.summary()
        lines.append(
            f"Test {result.spec.test_id} ({result.spec.name}), {result.solver_variant}:"
            f" final position error {format_statistic(*summary['final_pos_err'])} m,"
            f" final rotation error {format_statistic(*summary['final_rot_err'])} deg,"
            f" wall {format_statistic(*summary['wall_ms'])} ms"
        )
    return lines


def write_summary_text(out: Path, lines: Sequence[str], failed: Optional[str] = None):
    with open(out / "summary.txt", "w") as stream:
        for line in lines:
            stream.write(line + "\n")
        if failed is not None:
            stream.write(f"FAILED: {failed}\n")


def _write_seed(out: Path, test_id: int, variant: str, run: SeedRun) -> None:
    write_trajectory(out / f"trajectory_test{test_id}_{variant}_seed{run.seed}.csv", run)


def _run_tests(run: RunConfig, out: Path, lines: List[str]) -> None:
    results: List[RunResult] = []
    try:
        for test_id in run.tests:
            spec = run.test_spec(test_id)
            for variant in run.variants:
                try:
                    result = run_test(spec, run.solver_config(variant), run.workers)
                except SimulationError as e:
                    if isinstance(e.partial, SeedRun):
                        _write_seed(out, test_id, variant, e.partial)
                    raise
                for seed_run in result.runs:
                    _write_seed(out, test_id, variant, seed_run)
                results.append(result)
                lines += _summary_table([result])
            if test_id == 7 and spec.pusher_mode == "velocity":
                lines.append(
                    f"Test 7 drives the rod at {format_real(spec.push_speed)} m/s;"
                    " set test.pusher_mode=force for a constant pusher force."
                )
    finally:
        write_summary(out / "summary.csv", results)
    for test_id in run.skipped:
        lines.append(f"Test {test_id} skipped: no bunny mesh")


def _study_frames(run: RunConfig) -> int:
    return run.frames if run.frames is not None else run.test_spec(1).frames


def _run_sweep(run: RunConfig, out: Path, lines: List[str]) -> None:
    sweep = run_sweep(
        run.sweep_mu,
        run.sweep_force,
        solvers=run.variants,
        base=SolverConfig(**run.solver_overrides),
        frames=_study_frames(run),
        seed=run.seeds[0],
        workers=run.workers,
    )
    lines += [f"Wrote {path.name}" for path in write_sweep(out, sweep)]
    if {"pbd", "pbdr"} <= set(run.variants):
        violations = sweep.dominance_violations()
        lines.append(f"Cells where pbdr is worse than pbd: {len(violations)}")
        lines += [f"  mu={format_real(mu)} F={format_real(f)}" for mu, f in violations]
    lines += [
        f"Cell {variant} mu={format_real(mu)} F={format_real(force)} failed: {error}"
        for variant, mu, force, error in sweep.failures
    ]


def _default_resolutions(test_id: int) -> Tuple[float, ...]:
    if expected_object(test_id) == "bunny":
        return (4.0 * BUNNY_RADIUS, 2.0 * BUNNY_RADIUS, BUNNY_RADIUS)
    return tuple(float(n) for n in BOX_RESOLUTIONS)


def _run_resolution(run: RunConfig, out: Path, lines: List[str]) -> None:
    test_id = run.tests[0]
    overrides: Dict[str, Any] = {
        name: value
        for name, value in run.test_overrides.items()
        if name not in ("n_per_axis", "bunny_radius")
    }
    overrides["seeds"] = run.seeds
    if run.frames is not None:
        overrides["frames"] = run.frames
    rows = run_resolution_study(
        test_id,
        run.resolutions or _default_resolutions(test_id),
        run.solver_config(),
        workers=run.workers,
        **overrides,
    )
    write_resolution(out / "resolution.csv", rows)
    lines += [
        f"Test {row.test_id} at {format_real(row.resolution)}: {row.spheres} spheres,"
        f" final error {format_real(row.final_error)},"
        f" inertia error {format_real(row.inertia_error)}"
        for row in rows
    ]


def _run_ablation(run: RunConfig, out: Path, lines: List[str]) -> None:
    rows = run_ablation(
        SolverConfig(**run.solver_overrides),
        frames=_study_frames(run),
        seed=run.seeds[0],
        workers=run.workers,
    )
    write_ablation(out / "ablation.csv", rows)
    lines.append("Reference velocities are the derivative of the analytic motion.")
    lines += [
        f"{row.ablation} {row.metric}: mean {format_real(row.mean)},"
        f" ratio {format_real(row.ratio)}"
        for row in rows
    ]


def _run_pack(run: RunConfig, out: Path, lines: List[str]) -> None:
    if run.pack_shape == "bunny":
        mesh = load_mesh(str(resolve_mesh_path(run.pack_mesh)))
        packing = pack_mesh(mesh, run.pack_radius or BUNNY_RADIUS)
    elif run.pack_shape == "rod":
        packing = pack_rod(ROD_LENGTH, run.pack_radius or ROD_RADIUS)
    else:
        packing = pack_box((BOX_HALF_EXTENT,) * 3, run.pack_n_per_axis)
    packing.to_csv(out / "packing.csv")
    lines.append(
        f"{run.pack_shape}: {len(packing)} spheres of radius {format_real(packing.radius)}"
    )


def _run_runtime(run: RunConfig, out: Path, lines: List[str]) -> None:
    frames = run.frames if run.frames is not None else 100
    rows = measure_runtime(run.runtime_n_per_axis, frames, run.solver_config())
    write_runtime(out / "runtime.csv", rows)
    lines += [
        f"{row.spheres} spheres: {format_real(row.wall_s)} s for {row.frames} frames"
        for row in rows
    ]
    lines.append(f"log-log slope: {format_real(runtime_slope(rows))}")


_HANDLERS = {
    "run-test": _run_tests,
    "all": _run_tests,
    "sweep": _run_sweep,
    "resolution": _run_resolution,
    "ablate": _run_ablation,
    "pack": _run_pack,
    "runtime": _run_runtime,
}

# errors raised by the physics once the configuration was accepted
SIMULATION_ERRORS = (
    SimulationError,
    DegenerateConfigurationError,
    RankDeficientError,
    EmptyPackingError,
    InvalidMomentError,
    ContactLostError,
    PushOutsideLimitSurfaceError,
)


def execute(run: RunConfig) -> int:
    """Runs the selected command and writes its CSVs plus summary.txt.

    On a simulation error whatever was finished is kept and summary.txt ends with
    a FAILED line before the error propagates.
    """
    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    lines: List[str] = []
    try:
        _HANDLERS[run.command](run, out, lines)
    except SIMULATION_ERRORS as e:
        write_summary_text(out, lines, f"{e.__class__.__name__}: {e}")
        raise
    write_summary_text(out, lines)
    for line in lines:
        print(line)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    arguments = build_parser().parse_args(argv)
    logging.basicConfig(
        level=arguments.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        run = parse_config(argv)
    except ConfigError as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, MeshFormatError) as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        return execute(run)
    except SIMULATION_ERRORS as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_SIMULATION
    except (OSError, MeshFormatError) as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_IO
