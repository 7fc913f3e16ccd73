"""A simulated world: particle state, bodies, support plane and applied loads."""

from dataclasses import dataclass, field
import logging
import math
from typing import List, Optional

import numpy as np
import numpy.typing as npt

from pbdr.body import Body, ParticleState
from pbdr.math3d import ArrayLike3, Vec3, vec3

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Plane:
    point: Vec3
    normal: Vec3
    friction: float = 0.0

    def __post_init__(self):
        normal = vec3(self.normal)
        if abs(float(np.linalg.norm(normal)) - 1.0) > 1e-9:
            raise ValueError(f"The plane normal must have unit length, got {normal}")
        if self.friction < 0.0:
            raise ValueError(f"The friction coefficient must be >= 0, got {self.friction}")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "point", vec3(self.point))

    @classmethod
    def through(cls, point: ArrayLike3, normal: ArrayLike3, friction: float = 0.0):
        normal = vec3(normal)
        return cls(point=vec3(point), normal=normal / np.linalg.norm(normal), friction=friction)

    @classmethod
    def ground(cls, friction: float = 0.0) -> "Plane":
        return cls(point=np.zeros(3), normal=np.array([0.0, 0.0, 1.0]), friction=friction)

    @classmethod
    def incline(cls, angle: float, friction: float = 0.0) -> "Plane":
        """Through the origin, rising towards -x; downhill is +x."""
        return cls(
            point=np.zeros(3),
            normal=np.array([math.sin(angle), 0.0, math.cos(angle)]),
            friction=friction,
        )

    @property
    def downhill(self) -> Vec3:
        """Steepest descent direction in the plane, zero for a horizontal plane."""
        down = np.array([0.0, 0.0, -1.0])
        tangential = down - (down @ self.normal) * self.normal
        norm = float(np.linalg.norm(tangential))
        return tangential / norm if norm > 1e-15 else np.zeros(3)

    def signed_distance(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return (np.asarray(points, dtype=np.float64) - self.point) @ self.normal


@dataclass(frozen=True, eq=False)
class ForceProgram:
    """Constant force and torque applied at a body's center of mass over [start, stop)."""

    body: int
    force: Vec3 = field(default_factory=lambda: np.zeros(3))
    torque: Vec3 = field(default_factory=lambda: np.zeros(3))
    start: float = 0.0
    stop: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "force", vec3(self.force))
        object.__setattr__(self, "torque", vec3(self.torque))

    def active(self, time: float) -> bool:
        return self.start <= time < self.stop


@dataclass(eq=False)
class Scene:
    particles: ParticleState
    bodies: List[Body]
    plane: Optional[Plane] = None
    loads: List[ForceProgram] = field(default_factory=list)
    contact_friction: float = 0.0
    contact_stiffness: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        if self.contact_friction < 0.0:
            raise ValueError("contact_friction must be >= 0")
        if not 0.0 < self.contact_stiffness <= 1.0:
            raise ValueError("contact_stiffness must lie in (0, 1]")
        for load in self.loads:
            if self.bodies[load.body].kinematic:
                raise ValueError(
                    f"Body '{self.bodies[load.body].name}' is kinematic and cannot"
                    " receive loads."
                )

    @property
    def dynamic_bodies(self) -> List[Body]:
        return [body for body in self.bodies if not body.kinematic]


class SceneBuilder:
    """Collects bodies and assembles the particle arrays in the requested precision."""

    def __init__(self, dtype: npt.DTypeLike = np.float32):
        self.dtype = np.dtype(dtype)
        self._positions: List[npt.NDArray[np.float64]] = []
        self._velocities: List[npt.NDArray[np.float64]] = []
        self._radii: List[float] = []
        self.bodies: List[Body] = []
        self.loads: List[ForceProgram] = []
        self._count = 0

    def add_body(
        self,
        rest_positions: npt.ArrayLike,
        radius: float,
        mass: float,
        name: str = "",
        velocity: ArrayLike3 = (0.0, 0.0, 0.0),
        kinematic: bool = False,
        gravity_scale: float = 1.0,
        jitter: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ) -> int:
        """Adds a body at `rest_positions`; jitter perturbs the initial positions only."""
        rest_positions = np.asarray(rest_positions, dtype=np.float64).reshape(-1, 3)
        body = Body.from_rest_positions(
            rest_positions,
            mass,
            start=self._count,
            name=name,
            kinematic=kinematic,
            gravity_scale=gravity_scale,
        )
        positions = rest_positions.copy()
        if jitter > 0.0 and not kinematic:
            rng = rng if rng is not None else np.random.default_rng(0)
            positions += rng.uniform(-jitter, jitter, size=positions.shape)
        self._positions.append(positions)
        self._velocities.append(np.tile(vec3(velocity), (len(positions), 1)))
        self._radii.extend([radius] * len(positions))
        self.bodies.append(body)
        self._count += len(positions)
        return len(self.bodies) - 1

    def add_load(self, load: ForceProgram) -> None:
        self.loads.append(load)

    def build(
        self,
        plane: Optional[Plane] = None,
        contact_friction: float = 0.0,
        contact_stiffness: float = 1.0,
    ) -> Scene:
        if not self.bodies:
            raise ValueError("A scene needs at least one body.")
        inverse_masses = np.concatenate(
            [
                np.zeros(body.size) if body.kinematic else 1.0 / body.particle_masses
                for body in self.bodies
            ]
        )
        body_ids = np.concatenate(
            [np.full(body.size, index) for index, body in enumerate(self.bodies)]
        )
        particles = ParticleState(
            positions=np.concatenate(self._positions).astype(self.dtype),
            velocities=np.concatenate(self._velocities).astype(self.dtype),
            inverse_masses=inverse_masses.astype(self.dtype),
            radii=np.asarray(self._radii, dtype=self.dtype),
            body_ids=body_ids.astype(np.int64),
        )
        return Scene(
            particles=particles,
            bodies=list(self.bodies),
            plane=plane,
            loads=list(self.loads),
            contact_friction=contact_friction,
            contact_stiffness=contact_stiffness,
        )
