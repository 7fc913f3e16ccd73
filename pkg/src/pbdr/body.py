"""Rigid bodies made of particles: mass properties, momenta and pose extraction.

Particle state is stored as a structure of arrays (`ParticleState`); a `Body` owns
a contiguous range of it. Sums over particles are accumulated in float64 whatever
the precision of the state.
"""

from dataclasses import dataclass
from functools import cached_property
import logging
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

from pbdr.math3d import (
    DegenerateConfigurationError,
    Mat3,
    RankDeficientError,
    Rotation,
    Vec3,
    invert_spd,
    polar_decompose,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Particle:
    position: Vec3
    velocity: Vec3
    inverse_mass: float
    radius: float
    body_id: int


@dataclass(eq=False)
class ParticleState:
    positions: npt.NDArray[np.floating]
    velocities: npt.NDArray[np.floating]
    inverse_masses: npt.NDArray[np.floating]
    radii: npt.NDArray[np.floating]
    body_ids: npt.NDArray[np.int64]

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def dtype(self) -> np.dtype:
        return self.positions.dtype

    def particle(self, index: int) -> Particle:
        return Particle(
            position=self.positions[index].astype(np.float64),
            velocity=self.velocities[index].astype(np.float64),
            inverse_mass=float(self.inverse_masses[index]),
            radius=float(self.radii[index]),
            body_id=int(self.body_ids[index]),
        )

    def copy(self) -> "ParticleState":
        return ParticleState(
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            inverse_masses=self.inverse_masses.copy(),
            radii=self.radii.copy(),
            body_ids=self.body_ids.copy(),
        )


@dataclass(frozen=True)
class MomentumState:
    linear: Vec3
    angular: Vec3
    com: Vec3


@dataclass(frozen=True, eq=False)
class Body:
    """Particles `start:stop` of a `ParticleState`, with their rest pose.

    `rest_offsets` are the rest positions relative to `rest_com`; their
    mass-weighted sum is zero.
    """

    start: int
    stop: int
    rest_offsets: npt.NDArray[np.float64]
    rest_com: Vec3
    particle_masses: npt.NDArray[np.float64]
    name: str = ""
    kinematic: bool = False
    gravity_scale: float = 1.0

    @classmethod
    def from_rest_positions(
        cls,
        rest_positions: npt.ArrayLike,
        total_mass: float,
        start: int = 0,
        name: str = "",
        kinematic: bool = False,
        gravity_scale: float = 1.0,
    ) -> "Body":
        rest_positions = np.asarray(rest_positions, dtype=np.float64).reshape(-1, 3)
        if len(rest_positions) == 0:
            raise ValueError("A body needs at least one particle.")
        if total_mass <= 0.0:
            raise ValueError(f"total_mass must be positive, got {total_mass}")
        count = len(rest_positions)
        masses = np.full(count, total_mass / count)
        rest_com = masses @ rest_positions / total_mass
        return cls(
            start=start,
            stop=start + count,
            rest_offsets=rest_positions - rest_com,
            rest_com=rest_com,
            particle_masses=masses,
            name=name,
            kinematic=kinematic,
            gravity_scale=gravity_scale,
        )

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)

    @property
    def particle_indices(self) -> npt.NDArray[np.int64]:
        return np.arange(self.start, self.stop)

    @property
    def size(self) -> int:
        return self.stop - self.start

    @cached_property
    def total_mass(self) -> float:
        return float(self.particle_masses.sum())

    @property
    def is_point(self) -> bool:
        return self.size == 1

    @cached_property
    def rest_inertia(self) -> Mat3:
        return inertia_about(self.particle_masses, self.rest_offsets, np.zeros(3))

    @cached_property
    def collinear_axis(self) -> Optional[Vec3]:
        """Rest direction of a body whose particles lie on one line, else None."""
        if self.is_point:
            return None
        try:
            invert_spd(self.rest_inertia)
        except RankDeficientError as e:
            return e.axis
        return None

    @cached_property
    def rest_axis_coordinates(self) -> Optional[npt.NDArray[np.float64]]:
        if self.collinear_axis is None:
            return None
        return self.rest_offsets @ self.collinear_axis


def center_of_mass(masses: npt.NDArray[np.float64], positions: npt.ArrayLike) -> Vec3:
    return np.einsum("p,pi->i", masses, positions, dtype=np.float64) / masses.sum()


def inertia_about(
    masses: npt.NDArray[np.float64], positions: npt.ArrayLike, point: Vec3
) -> Mat3:
    r = np.asarray(positions, dtype=np.float64) - point
    weighted = masses[:, None] * r
    second_moment = weighted.T @ r
    return np.trace(second_moment) * np.eye(3) - second_moment


def momentum_of(
    masses: npt.NDArray[np.float64], positions: npt.ArrayLike, velocities: npt.ArrayLike
) -> MomentumState:
    com = center_of_mass(masses, positions)
    p = masses[:, None] * np.asarray(velocities, dtype=np.float64)
    r = np.asarray(positions, dtype=np.float64) - com
    return MomentumState(
        linear=p.sum(axis=0), angular=np.cross(r, p).sum(axis=0), com=com
    )


def compute_com(body: Body, particles: ParticleState) -> Vec3:
    return center_of_mass(body.particle_masses, particles.positions[body.slice])


def compute_inertia(body: Body, particles: ParticleState) -> Mat3:
    positions = particles.positions[body.slice]
    com = center_of_mass(body.particle_masses, positions)
    return inertia_about(body.particle_masses, positions, com)


def compute_momentum(body: Body, particles: ParticleState) -> MomentumState:
    s = body.slice
    return momentum_of(
        body.particle_masses, particles.positions[s], particles.velocities[s]
    )


def moment_matrix(body: Body, positions: npt.ArrayLike, com: Vec3) -> Mat3:
    """Sum of m_p (x_p - com)(q_p)^T over the body, q_p the rest offsets."""
    r = np.asarray(positions, dtype=np.float64) - com
    return (body.particle_masses[:, None] * r).T @ body.rest_offsets


def chain_direction(body: Body, positions: npt.ArrayLike, com: Vec3) -> Vec3:
    """Current direction of a collinear body's rest axis."""
    r = np.asarray(positions, dtype=np.float64) - com
    weights = body.particle_masses * body.rest_axis_coordinates
    direction = weights @ r
    norm = float(np.linalg.norm(direction))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateConfigurationError(
            f"Body '{body.name}' has collapsed onto its center of mass."
        )
    return direction / norm


def body_rotation(body: Body, positions: npt.ArrayLike, com: Vec3) -> Rotation:
    if body.is_point:
        return Rotation.identity()
    if body.collinear_axis is not None:
        return Rotation.between_vectors(
            body.collinear_axis, chain_direction(body, positions, com)
        )
    rotation, _ = polar_decompose(moment_matrix(body, positions, com))
    return rotation


def extract_pose(body: Body, particles: ParticleState) -> Tuple[Vec3, Rotation]:
    """Center of mass and orientation relative to the rest pose.

    For a collinear body the orientation is the shortest-arc rotation of its axis;
    the roll about the axis is undefined and reported as zero.
    """
    positions = particles.positions[body.slice]
    com = center_of_mass(body.particle_masses, positions)
    return com, body_rotation(body, positions, com)
