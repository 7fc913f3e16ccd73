"""Quasi-static planar pushing of a box by a point pusher.

The support friction is summarised by an ellipsoidal limit surface
(f_x / f_max)^2 + (f_y / f_max)^2 + (m / m_max)^2 = 1 for a uniform pressure
distribution. The pusher either sticks to the box face, or slides along it
when the required contact force leaves the contact friction cone; both cases
give the box twist (v_x, v_y, omega) for a given pusher velocity.
"""

from dataclasses import dataclass, replace
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)

MAX_PUSH_DT = 1e-4
SEPARATION_TOLERANCE = 1e-6
FOOTPRINT_SAMPLES = 200

Planar = Tuple[float, float]


class ContactLostError(Exception):
    pass


class PushOutsideLimitSurfaceError(Exception):
    """A force pusher strong enough to slide the box, where no quasi-static reference
    exists."""


def _rotation(theta: float) -> npt.NDArray[np.float64]:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class LimitSurface:
    max_force: float
    max_moment: float

    @classmethod
    def uniform_rectangle(
        cls,
        half_extents: Planar,
        mass: float,
        mu: float,
        g: float,
        samples: int = FOOTPRINT_SAMPLES,
    ) -> "LimitSurface":
        """Limit surface of a rectangle pressing uniformly on its support.

        The moment limit is mu * M * g times the mean distance of the footprint
        to its center, integrated with the midpoint rule.
        """
        hx, hy = half_extents
        xs = (np.arange(samples) + 0.5) / samples * 2.0 * hx - hx
        ys = (np.arange(samples) + 0.5) / samples * 2.0 * hy - hy
        grid_x, grid_y = np.meshgrid(xs, ys, indexing="ij")
        mean_radius = float(np.hypot(grid_x, grid_y).mean())
        max_force = mu * mass * g
        return cls(max_force=max_force, max_moment=max_force * mean_radius)

    @property
    def characteristic_length(self) -> float:
        return self.max_moment / self.max_force

    def load_factor(self, force: Planar, moment: float) -> float:
        """Below 1 the wrench is resisted by static support friction."""
        fx, fy = force
        return (fx * fx + fy * fy) / self.max_force**2 + (moment / self.max_moment) ** 2


@dataclass(frozen=True)
class PushState:
    """Box pose in the plane and the pusher touching one of its faces.

    `face_normal` is the inward normal of the pushed face in the box frame and
    `pusher` the world position of the pusher tip.
    """

    x: float
    y: float
    theta: float
    pusher: Planar
    direction: Planar
    speed: float
    half_extents: Planar
    face_normal: Planar
    support_friction: float
    contact_friction: float
    limit_surface: LimitSurface
    time: float = 0.0
    in_contact: bool = True

    def _face_geometry(self) -> Tuple[float, float]:
        nx, ny = self.face_normal
        hx, hy = self.half_extents
        return abs(nx) * hx + abs(ny) * hy, abs(ny) * hx + abs(nx) * hy

    def contact(self) -> npt.NDArray[np.float64]:
        """Pusher tip in the box frame."""
        offset = np.array(self.pusher) - np.array([self.x, self.y])
        return _rotation(self.theta).T @ offset

    def penetration(self) -> float:
        """Signed depth of the pusher tip past the face, negative when separated."""
        depth, _ = self._face_geometry()
        return float(self.contact() @ np.array(self.face_normal)) + depth

    def contact_on_face(self) -> npt.NDArray[np.float64]:
        return self.contact() - self.penetration() * np.array(self.face_normal)

    def on_face(self) -> bool:
        _, half_width = self._face_geometry()
        nx, ny = self.face_normal
        lateral = float(self.contact() @ np.array([-ny, nx]))
        return (
            self.penetration() >= -SEPARATION_TOLERANCE and abs(lateral) <= half_width
        )


def initial_push_state(
    half_extents: Planar,
    mass: float,
    support_friction: float,
    contact_friction: float,
    g: float,
    offset: float,
    speed: float,
) -> PushState:
    """Box centered at the origin, pusher on the middle of the -x face shifted by
    `offset` half widths towards +y, moving along +x."""
    hx, hy = half_extents
    return PushState(
        x=0.0,
        y=0.0,
        theta=0.0,
        pusher=(-hx, offset * hy),
        direction=(1.0, 0.0),
        speed=speed,
        half_extents=(hx, hy),
        face_normal=(1.0, 0.0),
        support_friction=support_friction,
        contact_friction=contact_friction,
        limit_surface=LimitSurface.uniform_rectangle(
            (hx, hy), mass, support_friction, g
        ),
    )


def quasi_static_twist(
    contact: npt.ArrayLike,
    normal: npt.ArrayLike,
    pusher_velocity: npt.ArrayLike,
    characteristic_length: float,
    contact_friction: float,
) -> Optional[npt.NDArray[np.float64]]:
    """Body-frame twist (v_x, v_y, omega) of the pushed box, or None when the
    pusher moves away from the face."""
    cx, cy = np.asarray(contact, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    velocity = np.asarray(pusher_velocity, dtype=np.float64)
    normal_speed = float(velocity @ normal)
    if normal_speed <= 0.0:
        return None
    L = np.diag([1.0, 1.0, 1.0 / characteristic_length**2])
    J = np.array([[1.0, 0.0, -cy], [0.0, 1.0, cx]])
    mobility = J @ L @ J.T
    tangent = np.array([-normal[1], normal[0]])

    force = np.linalg.solve(mobility, velocity)
    normal_force = float(force @ normal)
    tangential_force = float(force @ tangent)
    if normal_force > 0.0 and abs(tangential_force) <= contact_friction * normal_force + 1e-12:
        return L @ J.T @ force

    # sliding: the force lies on the edge of the friction cone
    edge = normal + math.copysign(contact_friction, tangential_force) * tangent
    scale = normal_speed / float((mobility @ edge) @ normal)
    return scale * (L @ J.T @ edge)


def oracle_push_step(state: PushState, dt: float) -> PushState:
    if dt > MAX_PUSH_DT:
        raise ValueError(f"The pushing model needs dt <= {MAX_PUSH_DT}, got {dt}")
    if not state.in_contact:
        return state
    if not state.on_face():
        return replace(state, in_contact=False)
    rotation = _rotation(state.theta)
    pusher_velocity = state.speed * np.array(state.direction)
    twist = quasi_static_twist(
        state.contact_on_face(),
        state.face_normal,
        rotation.T @ pusher_velocity,
        state.limit_surface.characteristic_length,
        state.contact_friction,
    )
    if twist is None:
        return replace(state, in_contact=False)
    velocity = rotation @ twist[:2]
    return replace(
        state,
        x=state.x + dt * float(velocity[0]),
        y=state.y + dt * float(velocity[1]),
        theta=state.theta + dt * float(twist[2]),
        pusher=(
            state.pusher[0] + dt * float(pusher_velocity[0]),
            state.pusher[1] + dt * float(pusher_velocity[1]),
        ),
        time=state.time + dt,
    )


def is_static_under_push(state: PushState, force: float) -> bool:
    """Whether a pusher force of this magnitude stays inside the limit surface."""
    body_force = _rotation(state.theta).T @ (force * np.array(state.direction))
    cx, cy = state.contact_on_face()
    moment = cx * body_force[1] - cy * body_force[0]
    return bool(state.limit_surface.load_factor(tuple(body_force), moment) < 1.0)


def integrate_push(
    state: PushState,
    frames: int,
    frame_time: float,
    dt: float = MAX_PUSH_DT,
    strict: bool = False,
) -> List[PushState]:
    """Reference states at every frame boundary, `frames + 1` of them.

    After the pusher loses the box the last pose is held, or ContactLostError is
    raised when `strict`.
    """
    steps = max(1, int(math.ceil(frame_time / dt - 1e-9)))
    dt = frame_time / steps
    states = [state]
    for frame in range(frames):
        for _ in range(steps):
            state = oracle_push_step(state, dt)
            if not state.in_contact:
                break
        if not state.in_contact and states[-1].in_contact:
            if strict:
                raise ContactLostError(
                    f"The pusher left the box face at t = {state.time:.4f} s"
                )
            logger.warning(
                "The pusher lost contact with the box at t = %.4f s (frame %d)",
                state.time,
                frame + 1,
            )
        states.append(replace(state, time=(frame + 1) * frame_time))
    return states

