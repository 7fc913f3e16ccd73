"""Error metrics between a simulated body and its reference motion."""

import math
from typing import Sequence

import numpy as np
import numpy.typing as npt

from pbdr.math3d import Rotation, Vec3, accumulated_angle, geodesic_angle

# tests whose rotation error is an accumulated angle about z rather than geodesic
UNWRAPPED_TESTS = (2, 5, 7)


def position_error(com: Vec3, reference: Vec3) -> float:
    return float(np.linalg.norm(np.asarray(com, dtype=np.float64) - reference))


def rotation_error(
    test_id: int, orientation: Rotation, angle: float, reference_angle: float
) -> float:
    """Rotation error in degrees.

    `angle` and `reference_angle` are accumulated angles about z in radians and
    are only used by the tests that spin the body.
    """
    if test_id in UNWRAPPED_TESTS:
        return accumulated_angle(math.degrees(reference_angle), math.degrees(angle))
    return geodesic_angle(Rotation.from_axis_angle((0.0, 0.0, 1.0), reference_angle), orientation)


def time_mean(values: Sequence[float]) -> float:
    """Mean over every frame after the initial one."""
    array = np.asarray(values, dtype=np.float64)
    if len(array) <= 1:
        return float(array.mean()) if len(array) else 0.0
    return float(array[1:].mean())


def seed_statistics(values: npt.ArrayLike):
    """Mean and population standard deviation over seeds (0 for a single seed)."""
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())
