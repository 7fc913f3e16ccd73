"""Triangle meshes: OBJ reading, ray-parity inside tests and continuous mass properties."""

from dataclasses import dataclass
import hashlib
import logging
import os
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import numpy.typing as npt

from pbdr.math3d import Mat3, Vec3

logger = logging.getLogger(__name__)

RAY_JITTER_SEED = 0
MAX_RAY_ATTEMPTS = 8
_BARYCENTRIC_EPSILON = 1e-9
_PARALLEL_EPSILON = 1e-12


class MeshFormatError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: npt.NDArray[np.float64]
    triangles: npt.NDArray[np.int64]
    source_path: str = ""
    source_hash: str = ""

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) == 0:
            raise MeshFormatError("A mesh needs at least one triangle.")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshFormatError(
                f"Triangle indices must lie in [0, {len(vertices)}), found"
                f" [{triangles.min()}, {triangles.max()}]."
            )
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    @classmethod
    def from_obj(cls, path: Union[str, "os.PathLike[str]"]) -> "TriMesh":
        path = Path(path)
        raw = path.read_bytes()
        vertices, triangles = parse_obj(raw.decode("utf-8", errors="replace"), path)
        return cls(
            vertices=np.array(vertices),
            triangles=np.array(triangles),
            source_path=str(path),
            source_hash=hashlib.sha256(raw).hexdigest(),
        )

    @property
    def bounds(self) -> Tuple[Vec3, Vec3]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def corners(self) -> npt.NDArray[np.float64]:
        """Triangle corners as a (T, 3, 3) array."""
        return self.vertices[self.triangles]


def parse_obj(text: str, origin: Union[str, Path] = "<string>"):
    vertices: List[List[float]] = []
    triangles: List[Tuple[int, int, int]] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if tokens[0] == "v":
            try:
                vertices.append([float(value) for value in tokens[1:4]])
            except ValueError:
                raise MeshFormatError(f"{origin}:{line_number}: bad vertex '{line}'")
            if len(vertices[-1]) != 3:
                raise MeshFormatError(
                    f"{origin}:{line_number}: a vertex needs three coordinates"
                )
        elif tokens[0] == "f":
            indices = []
            for token in tokens[1:]:
                try:
                    index = int(token.split("/")[0])
                except ValueError:
                    raise MeshFormatError(
                        f"{origin}:{line_number}: bad face index '{token}'"
                    )
                indices.append(index - 1 if index > 0 else len(vertices) + index)
            if len(indices) < 3:
                raise MeshFormatError(
                    f"{origin}:{line_number}: a face needs at least three vertices"
                )
            # fan triangulation
            for k in range(1, len(indices) - 1):
                triangles.append((indices[0], indices[k], indices[k + 1]))
    if not triangles:
        raise MeshFormatError(f"{origin}: no faces found")
    return vertices, triangles


def ray_directions(
    seed: int = RAY_JITTER_SEED, attempts: int = MAX_RAY_ATTEMPTS
) -> npt.NDArray[np.float64]:
    """The fixed sequence of jittered ray directions, one per attempt."""
    rng = np.random.default_rng(seed)
    base = np.array([0.0, 0.0, 1.0])
    directions = base + rng.uniform(-0.2, 0.2, size=(attempts, 3))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


class _RayCaster:
    """Per-direction precomputation of the triangle set for parity tests."""

    def __init__(self, mesh: TriMesh, direction: Vec3):
        corners = mesh.corners()
        v0 = corners[:, 0]
        e1 = corners[:, 1] - v0
        e2 = corners[:, 2] - v0
        area = np.linalg.norm(np.cross(e1, e2), axis=1)
        keep = area > _PARALLEL_EPSILON * max(float(area.max()), 1e-300)
        self.v0, self.e1, self.e2 = v0[keep], e1[keep], e2[keep]
        self.direction = direction
        helper = np.eye(3)[int(np.argmin(np.abs(direction)))]
        self.u_axis = np.cross(direction, helper)
        self.u_axis /= np.linalg.norm(self.u_axis)
        self.w_axis = np.cross(direction, self.u_axis)
        kept = corners[keep]
        projected_u = kept @ self.u_axis
        projected_w = kept @ self.w_axis
        self.u_min, self.u_max = projected_u.min(axis=1), projected_u.max(axis=1)
        self.w_min, self.w_max = projected_w.min(axis=1), projected_w.max(axis=1)
        self.pvec = np.cross(direction, self.e2)
        self.det = np.einsum("ij,ij->i", self.e1, self.pvec)
        scale = np.linalg.norm(self.e1, axis=1) * np.linalg.norm(self.e2, axis=1)
        self.parallel = np.abs(self.det) <= _PARALLEL_EPSILON * scale
        extent = np.ptp(mesh.vertices, axis=0).max()
        self.slack = 1e-9 * max(float(extent), 1.0)

    def crossings(self, point: Vec3) -> Tuple[int, bool]:
        """Number of crossings of the ray from `point`, and whether it is ambiguous."""
        pu = float(point @ self.u_axis)
        pw = float(point @ self.w_axis)
        candidates = np.nonzero(
            (self.u_min <= pu + self.slack)
            & (pu - self.slack <= self.u_max)
            & (self.w_min <= pw + self.slack)
            & (pw - self.slack <= self.w_max)
        )[0]
        if len(candidates) == 0:
            return 0, False
        if np.any(self.parallel[candidates]):
            return 0, True
        det = self.det[candidates]
        tvec = point - self.v0[candidates]
        u = np.einsum("ij,ij->i", tvec, self.pvec[candidates]) / det
        qvec = np.cross(tvec, self.e1[candidates])
        v = (qvec @ self.direction) / det
        t = np.einsum("ij,ij->i", self.e2[candidates], qvec) / det
        w = 1.0 - u - v
        eps = _BARYCENTRIC_EPSILON
        inside = (u >= -eps) & (v >= -eps) & (w >= -eps)
        on_edge = inside & ((u <= eps) | (v <= eps) | (w <= eps))
        on_surface = inside & (np.abs(t) <= self.slack)
        if np.any((on_edge & (t > -self.slack)) | on_surface):
            return 0, True
        return int(np.count_nonzero(inside & (t > 0.0))), False


def points_in_mesh(
    points: npt.ArrayLike, mesh: TriMesh, seed: int = RAY_JITTER_SEED
) -> npt.NDArray[np.bool_]:
    """Parity inside test for many points; a point answers the same as alone."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    inside = np.zeros(len(points), dtype=bool)
    unresolved = np.arange(len(points))
    for attempt, direction in enumerate(ray_directions(seed)):
        caster = _RayCaster(mesh, direction)
        still_ambiguous = []
        for index in unresolved:
            count, ambiguous = caster.crossings(points[index])
            if ambiguous:
                still_ambiguous.append(index)
            else:
                inside[index] = count % 2 == 1
        if attempt > 0 and still_ambiguous:
            logger.debug(
                "%d points still ambiguous after ray attempt %d",
                len(still_ambiguous),
                attempt + 1,
            )
        unresolved = np.array(still_ambiguous, dtype=np.int64)
        if len(unresolved) == 0:
            break
    else:
        logger.warning(
            "%d points hit edges or vertices on all %d ray directions, reported"
            " as outside",
            len(unresolved),
            MAX_RAY_ATTEMPTS,
        )
    return inside


def point_in_mesh(p: npt.ArrayLike, mesh: TriMesh, seed: int = RAY_JITTER_SEED) -> bool:
    return bool(points_in_mesh(np.asarray(p).reshape(1, 3), mesh, seed)[0])


def _signed_tetrahedra(mesh: TriMesh):
    corners = mesh.corners()
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    volumes = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    return corners, volumes


def mesh_volume(mesh: TriMesh) -> float:
    _, volumes = _signed_tetrahedra(mesh)
    return abs(float(volumes.sum()))


def mesh_inertia(mesh: TriMesh, mass: float) -> Tuple[Vec3, Mat3]:
    """Center of mass and inertia tensor about it, for a closed mesh of uniform density."""
    corners, volumes = _signed_tetrahedra(mesh)
    volume = float(volumes.sum())
    if abs(volume) <= 0.0:
        raise MeshFormatError("The mesh encloses no volume.")
    centroids = corners.sum(axis=1) / 4.0
    com = (volumes[:, None] * centroids).sum(axis=0) / volume
    # second moment of each tetrahedron (origin, a, b, c) about the origin
    vertex_sum = corners.sum(axis=1)
    outer_sum = np.einsum("tki,tkj->tij", corners, corners)
    outer_of_sum = np.einsum("ti,tj->tij", vertex_sum, vertex_sum)
    second_moment = ((volumes / 20.0)[:, None, None] * (outer_sum + outer_of_sum)).sum(
        axis=0
    )
    density = mass / volume
    centered = density * (second_moment - volume * np.outer(com, com))
    inertia = np.trace(centered) * np.eye(3) - centered
    return com, inertia


def solid_box_inertia(mass: float, half_extents: npt.ArrayLike) -> Mat3:
    lx, ly, lz = 2.0 * np.asarray(half_extents, dtype=np.float64)
    return mass * np.diag([ly**2 + lz**2, lx**2 + lz**2, lx**2 + ly**2]) / 12.0
