"""CSV writers for every benchmark artifact. Floats carry nine significant digits."""

import csv
import os
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from pbdr.benchmark.runner import RunResult
from pbdr.benchmark.studies import AblationRow, ResolutionRow, RuntimeRow, SweepResult
from pbdr.display import format_real

PathLike = Union[str, "os.PathLike[str]"]

TRAJECTORY_HEADER = [
    "frame", "t", "body",
    "com_x", "com_y", "com_z",
    "qw", "qx", "qy", "qz",
    "Px", "Py", "Pz",
    "Lx", "Ly", "Lz",
    "ref_x", "ref_y", "ref_z", "ref_angle_deg",
    "pos_err", "rot_err_deg",
]  # fmt: skip
SUMMARY_HEADER = [
    "test",
    "solver_variant",
    "seed",
    "final_pos_err",
    "final_rot_err",
    "mean_pos_err",
    "mean_rot_err",
    "wall_ms",
]
ABLATION_HEADER = ["ablation", "metric", "t2", "t10", "mean", "ratio"]
RESOLUTION_HEADER = [
    "test",
    "resolution",
    "n_spheres",
    "final_error",
    "mean_error",
    "inertia_rel_err",
]
RUNTIME_HEADER = ["n_per_axis", "n_spheres", "frames", "wall_s"]


def _write(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[object]]):
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [format_real(value) if isinstance(value, float) else value for value in row]
            )


def write_trajectory(path: PathLike, run) -> None:
    """One row per frame of a `SeedRun`."""
    rows = []
    for frame in run.frames:
        q = frame.orientation
        rows.append(
            [frame.frame, float(frame.t), frame.body]
            + [float(v) for v in frame.com]
            + [float(q.w), float(q.x), float(q.y), float(q.z)]
            + [float(v) for v in frame.linear]
            + [float(v) for v in frame.angular]
            + [float(v) for v in frame.ref_com]
            + [float(frame.ref_angle_deg), float(frame.pos_err), float(frame.rot_err_deg)]
        )
    _write(path, TRAJECTORY_HEADER, rows)


def summary_rows(result: RunResult) -> List[List[object]]:
    return [
        [
            result.spec.test_id,
            result.solver_variant,
            run.seed,
            float(run.final_pos_err),
            float(run.final_rot_err),
            float(run.mean_pos_err),
            float(run.mean_rot_err),
            float(run.wall_ms),
        ]
        for run in result.runs
    ]


def write_summary(path: PathLike, results: Sequence[RunResult]) -> None:
    rows: List[List[object]] = []
    for result in results:
        rows.extend(summary_rows(result))
    _write(path, SUMMARY_HEADER, rows)


def write_sweep(directory: PathLike, sweep: SweepResult) -> List[Path]:
    """One matrix per solver and metric, friction down the rows and force across."""
    written = []
    for metric, matrices in (("pos", sweep.position), ("rot", sweep.rotation)):
        for variant, matrix in matrices.items():
            path = Path(directory) / f"sweep_{variant}_{metric}.csv"
            header = ["mu\\F"] + [format_real(force) for force in sweep.forces]
            rows = [
                [float(mu)] + [float(value) for value in matrix[i]]
                for i, mu in enumerate(sweep.frictions)
            ]
            _write(path, header, rows)
            written.append(path)
    return written


def write_resolution(path: PathLike, rows: Sequence[ResolutionRow]) -> None:
    _write(
        path,
        RESOLUTION_HEADER,
        (
            [
                row.test_id,
                float(row.resolution),
                row.spheres,
                float(row.final_error),
                float(row.mean_error),
                float(row.inertia_error),
            ]
            for row in rows
        ),
    )


def write_ablation(path: PathLike, rows: Sequence[AblationRow]) -> None:
    """Velocities are compared with the derivative of the analytic motion."""
    _write(
        path,
        ABLATION_HEADER,
        (
            [row.ablation, row.metric, row.t2, row.t10, row.mean, row.ratio]
            for row in rows
        ),
    )


def write_runtime(path: PathLike, rows: Sequence[RuntimeRow]) -> None:
    _write(
        path,
        RUNTIME_HEADER,
        ([row.n_per_axis, row.spheres, row.frames, float(row.wall_s)] for row in rows),
    )
