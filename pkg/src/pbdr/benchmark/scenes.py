"""Scene construction for the seven benchmark tests."""

from dataclasses import dataclass, field
from functools import lru_cache
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import numpy.typing as npt

from pbdr.benchmark.oracles import InvalidMomentError
from pbdr.benchmark.pushing import PushState, initial_push_state
from pbdr.body import Body
from pbdr.config import BUNNY_MESH, BUNNY_RADIUS, SolverConfig, TestSpec
from pbdr.geometry.mesh import TriMesh, solid_box_inertia
from pbdr.geometry.packing import SpherePacking, pack_box, pack_mesh, pack_rod
from pbdr.math3d import Rotation, Vec3
from pbdr.scene import ForceProgram, Plane, Scene, SceneBuilder

logger = logging.getLogger(__name__)

MESH_DIR_VARIABLE = "PBDR_MESH_DIR"
TARGET_BODY = 0


@dataclass(eq=False)
class BenchmarkScene:
    """A built test scene with what its reference motion needs.

    `initial_com` is the unjittered center of mass of the measured body and
    `direction` the unit direction of its analytic translation.
    """

    spec: TestSpec
    scene: Scene
    packing: SpherePacking
    initial_com: Vec3
    direction: Vec3
    moment: Optional[float] = None
    push: Optional[PushState] = None
    info: Dict[str, Any] = field(default_factory=dict)


def resolve_mesh_path(mesh: Optional[str]) -> Path:
    """Relative paths are looked up in $PBDR_MESH_DIR, else the working directory."""
    path = Path(mesh if mesh is not None else BUNNY_MESH)
    if not path.is_absolute():
        path = Path(os.environ.get(MESH_DIR_VARIABLE, ".")) / path
    return path


@lru_cache(maxsize=4)
def load_mesh(path: str) -> TriMesh:
    return TriMesh.from_obj(path)


@lru_cache(maxsize=16)
def _cached_mesh_packing(path: str, radius: float) -> SpherePacking:
    return pack_mesh(load_mesh(path), radius)


def object_packing(spec: TestSpec, radius: Optional[float] = None) -> SpherePacking:
    """Sphere packing of the measured object, centered on its own center of mass."""
    if spec.obj == "bunny":
        path = str(resolve_mesh_path(spec.mesh))
        packing = _cached_mesh_packing(path, radius or spec.bunny_radius)
        centers = packing.centers - packing.centers.mean(axis=0)
        return SpherePacking(centers=centers, radius=packing.radius, source=packing.source)
    return pack_box(spec.half_extents, spec.n_per_axis)


def moment_about_z(packing: SpherePacking, mass: float) -> float:
    body = Body.from_rest_positions(packing.centers, mass)
    return float(body.rest_inertia[2, 2])


def reference_moment(spec: TestSpec, packing: SpherePacking) -> float:
    """Moment about z used by the rotation oracle.

    The box uses the solid box value. The bunny uses its packing at
    `reference_resolution`, by default the finest of the run's radius and the
    benchmark radius. The run's own packing must be non-degenerate.
    """
    particle_moment = moment_about_z(packing, spec.mass)
    if particle_moment <= 1e-12 * spec.mass * packing.radius**2:
        raise InvalidMomentError(
            f"The packing of {len(packing)} sphere(s) has no moment of inertia about z,"
            " a torque cannot spin it."
        )
    if spec.obj == "box":
        return float(solid_box_inertia(spec.mass, spec.half_extents)[2, 2])
    radius = spec.reference_resolution or min(spec.bunny_radius, BUNNY_RADIUS)
    if radius == packing.radius:
        return particle_moment
    return moment_about_z(object_packing(spec, radius=radius), spec.mass)


def _resting_on(plane: Plane, centers: npt.NDArray[np.float64], radius: float):
    """Translate `centers` along the plane normal so the lowest sphere touches it."""
    lowest = float(plane.signed_distance(centers).min())
    return centers + (radius - lowest) * plane.normal


def build_scene(spec: TestSpec, config: SolverConfig, seed: int = 0) -> BenchmarkScene:
    rng = np.random.default_rng(seed)
    builder = SceneBuilder(config.dtype)
    packing = object_packing(spec)
    centers = packing.centers

    if spec.slope > 0.0:
        plane = Plane.incline(spec.slope, spec.mu)
        centers = Rotation.from_axis_angle((0.0, 1.0, 0.0), spec.slope).apply(centers)
        direction = plane.downhill
    else:
        plane = Plane.ground(spec.mu)
        direction = np.array([1.0, 0.0, 0.0])
    centers = _resting_on(plane, centers, packing.radius)

    target = builder.add_body(
        centers,
        packing.radius,
        spec.mass,
        name=spec.obj.split("+")[-1],
        jitter=config.jitter,
        rng=rng,
    )
    initial_com = builder.bodies[target].rest_com.copy()
    info: Dict[str, Any] = {"spheres": len(packing), "radius": packing.radius}
    if spec.obj == "bunny":
        info.update(
            mesh=packing.source.get("path", ""),
            mesh_sha256=packing.source.get("sha256", ""),
            bbox_min=packing.source.get("bbox_min"),
            bbox_max=packing.source.get("bbox_max"),
        )

    moment = None
    push = None
    if spec.test_id in (1, 4):
        builder.add_load(ForceProgram(body=target, force=spec.force * direction))
    elif spec.test_id in (2, 5):
        moment = reference_moment(spec, packing)
        info["reference_moment"] = moment
        builder.add_load(ForceProgram(body=target, torque=(0.0, 0.0, spec.torque)))
    elif spec.test_id == 7:
        push = _add_pusher(builder, spec, initial_com, config.gravity)

    scene = builder.build(plane=plane, contact_friction=spec.contact_friction)
    logger.info(
        "Built test %d (%s): %d particles in %d bodies, seed %d",
        spec.test_id,
        spec.name,
        len(scene.particles),
        len(scene.bodies),
        seed,
    )
    return BenchmarkScene(
        spec=spec,
        scene=scene,
        packing=packing,
        initial_com=initial_com,
        direction=direction,
        moment=moment,
        push=push,
        info=info,
    )


def _add_pusher(
    builder: SceneBuilder, spec: TestSpec, box_com: Vec3, gravity: float
) -> PushState:
    """A rod along +x whose tip touches the box's -x face at the push offset, held
    at the height of the box center."""
    h = spec.box_half_extent
    rod = pack_rod(spec.rod_length, spec.rod_radius)
    tip = float(rod.centers[:, 0].max())
    shift = np.array(
        [box_com[0] - h - rod.radius - tip, box_com[1] + spec.push_offset * h, box_com[2]]
    )
    velocity = (spec.push_speed, 0.0, 0.0)
    if spec.pusher_mode == "velocity":
        builder.add_body(
            rod.centers + shift,
            rod.radius,
            spec.rod_mass,
            name="rod",
            velocity=velocity,
            kinematic=True,
            gravity_scale=0.0,
        )
    else:
        rod_index = builder.add_body(
            rod.centers + shift, rod.radius, spec.rod_mass, name="rod", gravity_scale=0.0
        )
        builder.add_load(ForceProgram(body=rod_index, force=(spec.force, 0.0, 0.0)))
    return initial_push_state(
        (h, h),
        spec.box_mass,
        spec.mu,
        spec.contact_friction,
        gravity,
        spec.push_offset,
        spec.push_speed,
    )
