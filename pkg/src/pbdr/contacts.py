"""Position corrections for particle-ground and particle-particle contacts."""

from collections import defaultdict
import itertools
import logging
from typing import DefaultDict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from pbdr.body import Body
from pbdr.scene import Plane

logger = logging.getLogger(__name__)

COINCIDENT_DISTANCE = 1e-9
FALLBACK_AXIS = np.array([1.0, 0.0, 0.0])

_NEIGHBOR_OFFSETS = list(itertools.product((-1, 0, 1), repeat=3))


def _coulomb_scale(
    tangential_norm: npt.NDArray[np.floating], limit: npt.NDArray[np.floating]
) -> npt.NDArray[np.floating]:
    """Fraction of the tangential displacement removed by positional friction."""
    scale = np.ones_like(tangential_norm)
    sliding = tangential_norm > limit
    scale[sliding] = limit[sliding] / tangential_norm[sliding]
    return scale


def ground_contact(
    positions: npt.NDArray[np.floating],
    initial_positions: npt.NDArray[np.floating],
    radii: npt.NDArray[np.floating],
    plane: Plane,
    active: Optional[npt.NDArray[np.bool_]] = None,
    stiffness: float = 1.0,
    normal_correction: Optional[npt.NDArray[np.floating]] = None,
) -> npt.NDArray[np.floating]:
    """Pushes penetrating particles out along the plane normal.

    Friction acts on the tangential displacement since the start of the substep:
    it is removed entirely while it is at most mu * d_n, else scaled down to that.
    d_n is the current depth plus `normal_correction`, the per-particle normal
    push already applied by earlier iterations of the same substep.
    """
    dtype = positions.dtype
    normal = plane.normal.astype(dtype)
    distance = (positions - plane.point.astype(dtype)) @ normal - radii
    touching = distance < 0.0
    if active is not None:
        touching &= active
    delta = np.zeros_like(positions)
    if not np.any(touching):
        return delta
    depth = -distance[touching]
    delta[touching] = stiffness * depth[:, None] * normal
    if plane.friction > 0.0:
        moved = positions[touching] - initial_positions[touching]
        tangential = moved - (moved @ normal)[:, None] * normal
        norm = np.linalg.norm(tangential, axis=1)
        pushed = depth
        if normal_correction is not None:
            pushed = depth + normal_correction[touching].astype(dtype)
        scale = _coulomb_scale(norm, dtype.type(plane.friction) * pushed)
        delta[touching] -= stiffness * scale[:, None] * tangential
    return delta


class SpatialHash:
    """Uniform grid over particle centers, keyed by integer cell coordinates."""

    def __init__(self, cell_size: float):
        if cell_size <= 0.0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        self.cell_size = float(cell_size)
        self.cells: DefaultDict[Tuple[int, int, int], List[int]] = defaultdict(list)

    def insert(self, positions: npt.ArrayLike, indices: Sequence[int]) -> None:
        keys = np.floor(np.asarray(positions, dtype=np.float64) / self.cell_size)
        for key, index in zip(keys.astype(np.int64).tolist(), indices):
            self.cells[tuple(key)].append(int(index))

    def candidate_pairs(self) -> List[Tuple[int, int]]:
        """Pairs (i, j), i < j, of particles in the same or adjacent cells."""
        pairs = []
        for (cx, cy, cz), members in self.cells.items():
            for dx, dy, dz in _NEIGHBOR_OFFSETS:
                neighbors = self.cells.get((cx + dx, cy + dy, cz + dz))
                if not neighbors:
                    continue
                for i in members:
                    for j in neighbors:
                        if i < j:
                            pairs.append((i, j))
        return pairs


def _bounds(positions, radii, body: Body):
    s = body.slice
    return (positions[s] - radii[s, None]).min(axis=0), (
        positions[s] + radii[s, None]
    ).max(axis=0)


def broad_phase(
    positions: npt.NDArray[np.floating],
    radii: npt.NDArray[np.floating],
    bodies: Sequence[Body],
) -> npt.NDArray[np.int64]:
    """Candidate particle pairs from different bodies, as an (K, 2) array.

    Body bounding boxes are intersected first; only the particles reaching into an
    intersection go into the spatial hash.
    """
    if len(bodies) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    bounds = [_bounds(positions, radii, body) for body in bodies]
    selected = np.zeros(len(positions), dtype=bool)
    for a, b in itertools.combinations(range(len(bodies)), 2):
        low = np.maximum(bounds[a][0], bounds[b][0])
        high = np.minimum(bounds[a][1], bounds[b][1])
        if np.any(low > high):
            continue
        for body in (bodies[a], bodies[b]):
            s = body.slice
            reach_low = positions[s] - radii[s, None]
            reach_high = positions[s] + radii[s, None]
            selected[s] |= np.all((reach_high >= low) & (reach_low <= high), axis=1)
    indices = np.nonzero(selected)[0]
    if len(indices) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    grid = SpatialHash(2.0 * float(radii[indices].max()))
    grid.insert(positions[indices], indices)
    pairs = np.array(grid.candidate_pairs(), dtype=np.int64).reshape(-1, 2)
    return pairs


def particle_particle_contact(
    positions: npt.NDArray[np.floating],
    initial_positions: npt.NDArray[np.floating],
    inverse_masses: npt.NDArray[np.floating],
    radii: npt.NDArray[np.floating],
    body_ids: npt.NDArray[np.int64],
    bodies: Sequence[Body],
    friction: float = 0.0,
    stiffness: float = 1.0,
) -> npt.NDArray[np.floating]:
    """Separates overlapping spheres of different bodies, weighted by inverse mass."""
    delta = np.zeros_like(positions)
    pairs = broad_phase(positions, radii, bodies)
    if len(pairs) == 0:
        return delta
    i, j = pairs[:, 0], pairs[:, 1]
    keep = body_ids[i] != body_ids[j]
    i, j = i[keep], j[keep]
    offset = positions[i] - positions[j]
    distance = np.linalg.norm(offset, axis=1)
    overlap = distance - (radii[i] + radii[j])
    w_i, w_j = inverse_masses[i], inverse_masses[j]
    w_sum = w_i + w_j
    touching = (overlap < 0.0) & (w_sum > 0.0)
    if not np.any(touching):
        return delta
    i, j = i[touching], j[touching]
    offset, distance, overlap = offset[touching], distance[touching], overlap[touching]
    w_i, w_j, w_sum = w_i[touching], w_j[touching], w_sum[touching]

    normal = np.empty_like(offset)
    coincident = distance < COINCIDENT_DISTANCE
    if np.any(coincident):
        logger.warning(
            "%d contact pairs have coincident centers, separating them along +x",
            int(coincident.sum()),
        )
        normal[coincident] = FALLBACK_AXIS.astype(positions.dtype)
    separated = ~coincident
    normal[separated] = offset[separated] / distance[separated, None]

    share_i = (w_i / w_sum)[:, None]
    share_j = (w_j / w_sum)[:, None]
    push = stiffness * overlap[:, None] * normal
    correction_i = -share_i * push
    correction_j = share_j * push
    if friction > 0.0:
        relative = (positions[i] - initial_positions[i]) - (
            positions[j] - initial_positions[j]
        )
        tangential = relative - np.einsum("ij,ij->i", relative, normal)[:, None] * normal
        norm = np.linalg.norm(tangential, axis=1)
        scale = _coulomb_scale(norm, positions.dtype.type(friction) * -overlap)
        slip = stiffness * scale[:, None] * tangential
        correction_i -= share_i * slip
        correction_j += share_j * slip
    np.add.at(delta, i, correction_i)
    np.add.at(delta, j, correction_j)
    return delta
