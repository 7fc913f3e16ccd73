"""One substep of position based dynamics for particle rigid bodies.

`step` runs the integration, then `solver_iterations` passes of ground contact,
particle-particle contact and shape matching, all three reading the same
positions. The revised solver ("pbdr") additionally updates velocities
incrementally and restores the linear and angular momentum that shape matching
must not change.
"""

from dataclasses import dataclass
import logging
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from pbdr.body import (
    Body,
    MomentumState,
    center_of_mass,
    chain_direction,
    compute_momentum,
    extract_pose,
    inertia_about,
    moment_matrix,
    momentum_of,
)
from pbdr.config import SolverConfig, VelocityUpdate
from pbdr.contacts import ground_contact, particle_particle_contact
from pbdr.math3d import (
    DegenerateConfigurationError,
    Mat3,
    RankDeficientError,
    Rotation,
    Vec3,
    invert_spd,
    polar_decompose,
)
from pbdr.scene import Scene

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.floating]


class SimulationError(Exception):
    """A solver failure, tagged with the frame it happened in."""

    def __init__(self, message: str, frame: int, partial: Optional[object] = None):
        super().__init__(f"frame {frame}: {message}")
        self.message = message
        self.frame = frame
        # whatever the caller managed to record before the failure
        self.partial = partial

    def __reduce__(self):
        return (self.__class__, (self.message, self.frame, self.partial))


@dataclass(eq=False)
class StepDelta:
    ground: Array
    particle: Array
    shape: Array

    @property
    def total(self) -> Array:
        return self.ground + self.particle + self.shape


@dataclass(eq=False)
class StepReport:
    delta: StepDelta
    momenta: List[MomentumState]


def solve_angular(
    inertia: Mat3, angular_error: Vec3, null_tolerance: float = 0.0
) -> Vec3:
    """omega with I omega = angular_error.

    When I is singular (a collinear body), the component of the error along the
    null axis is dropped if it is within `null_tolerance`, and the remaining
    system is solved with the null axis stiffened to trace(I).
    """
    try:
        return invert_spd(inertia) @ angular_error
    except RankDeficientError as e:
        axis = e.axis
        along = float(angular_error @ axis)
        if abs(along) > null_tolerance:
            raise RankDeficientError(
                f"Angular momentum change {along:.3e} about the axis"
                f" {np.round(axis, 9).tolist()} cannot be produced, the body has no"
                " inertia about it.",
                axis=axis,
            )
        logger.debug("Dropped %.3e of angular momentum about the null axis", along)
        regularized = inertia + np.trace(inertia) * np.outer(axis, axis)
        return invert_spd(regularized) @ (angular_error - along * axis)


def distribute_load(
    body: Body, positions: Array, force: Vec3, torque: Vec3
) -> npt.NDArray[np.float64]:
    """Per-particle forces equivalent to `force` and `torque` applied at the com.

    f_p = (m_p / M) F + m_p (alpha x r_p) with I alpha = torque, so that the forces
    sum to F and their moments about the com sum to the torque.
    """
    masses = body.particle_masses
    forces = np.outer(masses / body.total_mass, force)
    if np.any(torque != 0.0):
        com = center_of_mass(masses, positions)
        r = np.asarray(positions, dtype=np.float64) - com
        alpha = solve_angular(inertia_about(masses, positions, com), torque)
        forces += masses[:, None] * np.cross(alpha, r)
    return forces


def integrate(scene: Scene, config: SolverConfig) -> Tuple[Array, Array]:
    """Symplectic Euler prediction (positions, velocities) for the current substep."""
    state = scene.particles
    dtype = state.dtype
    acceleration = np.zeros((len(state), 3))
    gravity = np.array([0.0, 0.0, -config.gravity])
    for body in scene.dynamic_bodies:
        acceleration[body.slice] += body.gravity_scale * gravity
    for load in scene.loads:
        if not load.active(scene.time):
            continue
        body = scene.bodies[load.body]
        s = body.slice
        forces = distribute_load(body, state.positions[s], load.force, load.torque)
        acceleration[s] += forces / body.particle_masses[:, None]
    dt = dtype.type(config.dt)
    velocities = state.velocities + dt * acceleration.astype(dtype)
    positions = state.positions + dt * velocities
    return positions, velocities


def shape_matching(positions: Array, body: Body) -> Array:
    """Correction moving each particle of `body` onto its rigidly transformed rest position."""
    x = positions[body.slice]
    dtype = x.dtype
    if body.is_point:
        return np.zeros_like(x)
    com = center_of_mass(body.particle_masses, x)
    if body.collinear_axis is not None:
        direction = chain_direction(body, x, com)
        offsets = np.outer(body.rest_axis_coordinates, direction).astype(dtype)
    else:
        rotation, _ = polar_decompose(moment_matrix(body, x, com))
        matrix = rotation.as_matrix().astype(dtype)
        offsets = body.rest_offsets.astype(dtype) @ matrix.T
    return com.astype(dtype) + offsets - x


def update_velocity(
    velocities: Array,
    delta: Array,
    dt: float,
    mode: VelocityUpdate,
    positions: Optional[Array] = None,
    initial_positions: Optional[Array] = None,
) -> Array:
    """Velocities after a position correction `delta`.

    "incremental" adds delta / dt to the current velocities; "legacy" recomputes
    (positions - initial_positions) / dt from the positions after the correction.
    """
    dt = velocities.dtype.type(dt)
    if mode == "incremental":
        return velocities + delta / dt
    elif mode == "legacy":
        if positions is None or initial_positions is None:
            raise ValueError("The legacy velocity update needs the positions.")
        return (positions - initial_positions) / dt
    else:
        raise ValueError(
            f"Unknown velocity update '{mode}', only 'legacy' and 'incremental' exist."
        )


def null_axis_tolerance(body: Body, positions: Array, velocities: Array, floor: float):
    """Angular momentum on a null axis below this is rounding noise."""
    masses = body.particle_masses
    com = center_of_mass(masses, positions)
    r = np.linalg.norm(np.asarray(positions, dtype=np.float64) - com, axis=1)
    speed = np.linalg.norm(np.asarray(velocities, dtype=np.float64), axis=1)
    eps = float(np.finfo(positions.dtype).eps)
    return floor + np.sqrt(eps) * float(masses @ (r * speed))


def enforce_momentum(
    positions: Array,
    velocities: Array,
    body: Body,
    target: MomentumState,
    dt: float,
    linear: bool = True,
    angular: bool = True,
    null_floor: float = 1e-12,
) -> None:
    """Restores the body's momentum to `target`, in place.

    The linear correction is applied first; angular momentum is measured again
    afterwards since shifting all velocities changes L about the moving com.
    """
    s = body.slice
    x, v = positions[s], velocities[s]
    dtype = x.dtype
    masses = body.particle_masses
    dt = dtype.type(dt)
    if linear:
        current = momentum_of(masses, x, v)
        dv = ((target.linear - current.linear) / body.total_mass).astype(dtype)
        v += dv
        x += dv * dt
    if angular and not body.is_point:
        current = momentum_of(masses, x, v)
        error = current.angular - target.angular
        inertia = inertia_about(masses, x, current.com)
        tolerance = null_axis_tolerance(body, x, v, null_floor)
        omega = solve_angular(inertia, error, tolerance)
        r = np.asarray(x, dtype=np.float64) - current.com
        spin = np.cross(omega, r).astype(dtype)
        v -= spin
        x -= spin * dt
    positions[s] = x
    velocities[s] = v


def step(scene: Scene, config: SolverConfig) -> StepReport:
    """Advances `scene` by one substep of length config.dt."""
    state = scene.particles
    dt = config.dt
    mode = config.velocity_update
    initial = state.positions.copy()
    positions, velocities = integrate(scene, config)
    dynamic = scene.dynamic_bodies
    active = state.inverse_masses > 0.0
    fix_linear = config.fixes_linear_momentum
    fix_angular = config.fixes_angular_momentum
    fixing = fix_linear or fix_angular
    per_iteration = config.momentum_fix_schedule == "per_iteration"
    drift: Dict[int, Tuple[Vec3, Vec3]] = {
        body.start: (np.zeros(3), np.zeros(3)) for body in dynamic
    }

    zeros = np.zeros_like(positions)
    ground, particle, shape = zeros, zeros, zeros
    pushed = np.zeros(len(positions), dtype=positions.dtype)
    for _ in range(config.solver_iterations):
        if scene.plane is not None:
            ground = ground_contact(
                positions,
                initial,
                state.radii,
                scene.plane,
                active=active,
                stiffness=scene.contact_stiffness,
                normal_correction=pushed,
            )
            pushed += ground @ scene.plane.normal.astype(positions.dtype)
        particle = particle_particle_contact(
            positions,
            initial,
            state.inverse_masses,
            state.radii,
            state.body_ids,
            scene.bodies,
            friction=scene.contact_friction,
            stiffness=scene.contact_stiffness,
        )
        contact = ground + particle
        before: Dict[int, MomentumState] = {}
        if fixing:
            contact_positions = positions + contact
            contact_velocities = update_velocity(
                velocities, contact, dt, mode, contact_positions, initial
            )
            for body in dynamic:
                s = body.slice
                before[body.start] = momentum_of(
                    body.particle_masses, contact_positions[s], contact_velocities[s]
                )
        shape = np.zeros_like(positions)
        for body in dynamic:
            shape[body.slice] = shape_matching(positions, body)
        delta = contact + shape
        positions = positions + delta
        velocities = update_velocity(velocities, delta, dt, mode, positions, initial)
        if not fixing:
            continue
        for body in dynamic:
            if per_iteration:
                enforce_momentum(
                    positions,
                    velocities,
                    body,
                    before[body.start],
                    dt,
                    linear=fix_linear,
                    angular=fix_angular,
                    null_floor=config.contact_tolerance,
                )
            else:
                s = body.slice
                after = momentum_of(body.particle_masses, positions[s], velocities[s])
                linear_drift, angular_drift = drift[body.start]
                drift[body.start] = (
                    linear_drift + after.linear - before[body.start].linear,
                    angular_drift + after.angular - before[body.start].angular,
                )

    if fixing and not per_iteration:
        for body in dynamic:
            s = body.slice
            now = momentum_of(body.particle_masses, positions[s], velocities[s])
            linear_drift, angular_drift = drift[body.start]
            target = MomentumState(
                linear=now.linear - linear_drift,
                angular=now.angular - angular_drift,
                com=now.com,
            )
            enforce_momentum(
                positions,
                velocities,
                body,
                target,
                dt,
                linear=fix_linear,
                angular=fix_angular,
                null_floor=config.contact_tolerance,
            )

    state.positions[...] = positions
    state.velocities[...] = velocities
    scene.time += dt
    return StepReport(
        delta=StepDelta(ground=ground, particle=particle, shape=shape),
        momenta=[compute_momentum(body, state) for body in scene.bodies],
    )


@dataclass(frozen=True, eq=False)
class TrajectorySample:
    frame: int
    t: float
    body: int
    com: Vec3
    orientation: Rotation
    linear: Vec3
    angular: Vec3


TrajectoryHook = Callable[[TrajectorySample], None]


class Simulation:
    """Drives a scene frame by frame and reports every body's pose to the hooks."""

    def __init__(self, scene: Scene, config: SolverConfig):
        self.scene = scene
        self.config = config
        self.frame = 0
        self.hooks: List[TrajectoryHook] = []
        self.wall_time = 0.0

    def add_hook(self, hook: TrajectoryHook) -> None:
        self.hooks.append(hook)

    def samples(self) -> List[TrajectorySample]:
        state = self.scene.particles
        t = self.frame * self.config.frame_time
        samples = []
        for index, body in enumerate(self.scene.bodies):
            com, orientation = extract_pose(body, state)
            momentum = compute_momentum(body, state)
            samples.append(
                TrajectorySample(
                    frame=self.frame,
                    t=t,
                    body=index,
                    com=com,
                    orientation=orientation,
                    linear=momentum.linear,
                    angular=momentum.angular,
                )
            )
        return samples

    def emit(self) -> None:
        if not self.hooks:
            return
        for sample in self.samples():
            for hook in self.hooks:
                hook(sample)

    def advance_frame(self) -> None:
        started = time.perf_counter()
        try:
            for _ in range(self.config.substeps):
                step(self.scene, self.config)
        except (DegenerateConfigurationError, RankDeficientError) as e:
            raise SimulationError(f"{e.__class__.__name__}: {e}", self.frame + 1) from e
        finally:
            self.wall_time += time.perf_counter() - started
        self.frame += 1
        if not np.all(np.isfinite(self.scene.particles.positions)):
            raise SimulationError("particle positions are no longer finite", self.frame)
        self.emit()

    def run(self, frames: int) -> None:
        """Emits the initial frame, then advances `frames` frames."""
        if self.frame == 0:
            self.emit()
        for _ in range(frames):
            self.advance_frame()

