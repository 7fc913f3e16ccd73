"""Equal-radius sphere packings of boxes, rods and closed triangle meshes."""

import csv
from dataclasses import dataclass, field
import logging
import math
import os
from typing import Any, Dict, Union

import numpy as np
import numpy.typing as npt

from pbdr.display import format_real
from pbdr.geometry.mesh import RAY_JITTER_SEED, TriMesh, points_in_mesh

logger = logging.getLogger(__name__)

# tolerance on floor(extent / pitch) so that exact multiples are not lost to rounding
_COUNT_SLACK = 1e-9
PARITY_DISAGREEMENT_LIMIT = 1e-3


class EmptyPackingError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class SpherePacking:
    centers: npt.NDArray[np.float64]
    radius: float
    source: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.centers)

    def min_center_distance(self) -> float:
        if len(self) < 2:
            return math.inf
        return min(
            float(np.linalg.norm(self.centers[i + 1 :] - center, axis=1).min())
            for i, center in enumerate(self.centers[:-1])
        )

    def to_csv(self, path: Union[str, "os.PathLike[str]"]) -> None:
        with open(path, "w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(["cx", "cy", "cz", "radius"])
            radius = format_real(self.radius)
            for cx, cy, cz in self.centers:
                writer.writerow(
                    [format_real(cx), format_real(cy), format_real(cz), radius]
                )


def _grid_axis(low: float, extent: float, count: int, pitch: float):
    offset = (extent - count * pitch) / 2.0
    return low + offset + pitch / 2.0 + pitch * np.arange(count)


def pack_box(half_extents: npt.ArrayLike, n_per_axis: int) -> SpherePacking:
    half_extents = np.asarray(half_extents, dtype=np.float64).reshape(3)
    if n_per_axis < 1:
        raise ValueError(f"n_per_axis must be at least 1, got {n_per_axis}")
    if np.any(half_extents <= 0.0):
        raise ValueError(f"half_extents must be positive, got {half_extents}")
    spacing = 2.0 * half_extents / n_per_axis
    axes = [
        _grid_axis(-h, 2.0 * h, n_per_axis, s) for h, s in zip(half_extents, spacing)
    ]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    return SpherePacking(
        centers=grid,
        radius=float(spacing.min() / 2.0),
        source={
            "shape": "box",
            "half_extents": half_extents.tolist(),
            "n_per_axis": n_per_axis,
        },
    )


def pack_rod(length: float, radius: float) -> SpherePacking:
    """A single-sphere-wide chain along +x, centered on the origin."""
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    if length < 2.0 * radius * (1.0 - _COUNT_SLACK):
        raise ValueError(f"A rod of length {length} cannot hold a sphere of radius {radius}")
    count = max(1, int(math.floor(length / (2.0 * radius) + _COUNT_SLACK)))
    xs = 2.0 * radius * (np.arange(count) - (count - 1) / 2.0)
    centers = np.zeros((count, 3))
    centers[:, 0] = xs
    return SpherePacking(
        centers=centers,
        radius=float(radius),
        source={"shape": "rod", "length": float(length), "count": count},
    )


def pack_mesh(
    mesh: TriMesh, radius: float, seed: int = RAY_JITTER_SEED
) -> SpherePacking:
    """Keeps the points of a grid of pitch 2 * radius over the bounding box that lie
    inside the mesh. The grid is centered in the bounding box.

    Every candidate is also tested with a second family of ray directions; the
    fraction of candidates on which both disagree is recorded in the packing's
    source descriptor.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    low, high = mesh.bounds
    extent = high - low
    pitch = 2.0 * radius
    counts = np.floor(extent / pitch + _COUNT_SLACK).astype(int)
    descriptor: Dict[str, Any] = {
        "shape": "mesh",
        "path": mesh.source_path,
        "sha256": mesh.source_hash,
        "bbox_min": low.tolist(),
        "bbox_max": high.tolist(),
        "radius": float(radius),
    }
    if np.any(counts < 1):
        raise EmptyPackingError(
            f"A grid of pitch {pitch} does not fit in the mesh bounding box of extent"
            f" {extent.tolist()}."
        )
    axes = [_grid_axis(lo, ext, n, pitch) for lo, ext, n in zip(low, extent, counts)]
    candidates = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    inside = points_in_mesh(candidates, mesh, seed=seed)
    cross_check = points_in_mesh(candidates, mesh, seed=seed + 1)
    disagreement = float(np.count_nonzero(inside != cross_check)) / len(candidates)
    if disagreement > PARITY_DISAGREEMENT_LIMIT:
        logger.warning(
            "Inside tests disagree on %.3f%% of %d grid samples, the mesh is probably"
            " not watertight",
            100.0 * disagreement,
            len(candidates),
        )
    descriptor["candidates"] = int(len(candidates))
    descriptor["parity_disagreement"] = disagreement
    if not np.any(inside):
        raise EmptyPackingError(
            f"None of the {len(candidates)} grid points of pitch {pitch} lies inside"
            " the mesh."
        )
    logger.info(
        "Packed mesh %s with %d spheres of radius %g (%d candidates)",
        mesh.source_path or "<memory>",
        int(inside.sum()),
        radius,
        len(candidates),
    )
    return SpherePacking(centers=candidates[inside], radius=float(radius), source=descriptor)
