"""Closed-form reference motions. All of them compute in float64."""

import math


class InvalidMomentError(Exception):
    pass


def _translation_acceleration(force: float, mu: float, mass: float, g: float) -> float:
    if force <= mu * mass * g:
        return 0.0
    return (force - mu * mass * g) / mass


def oracle_translation(force: float, mu: float, mass: float, g: float, t: float) -> float:
    """Displacement of a block pushed by `force` against kinetic friction."""
    return 0.5 * _translation_acceleration(force, mu, mass, g) * t * t


def oracle_translation_velocity(
    force: float, mu: float, mass: float, g: float, t: float
) -> float:
    return _translation_acceleration(force, mu, mass, g) * t


def _angular_acceleration(torque: float, moment: float) -> float:
    if not moment > 0.0:
        raise InvalidMomentError(
            f"The moment of inertia about the torque axis must be positive, got {moment}"
        )
    return torque / moment


def oracle_rotation(torque: float, moment: float, t: float) -> float:
    """Accumulated angle in radians of a free body spun up by a constant torque."""
    return 0.5 * _angular_acceleration(torque, moment) * t * t


def oracle_rotation_rate(torque: float, moment: float, t: float) -> float:
    return _angular_acceleration(torque, moment) * t


def _slope_acceleration(theta: float, mu: float, g: float) -> float:
    if math.tan(theta) <= mu:
        return 0.0
    return g * math.sin(theta) - mu * g * math.cos(theta)


def oracle_slope(theta: float, mu: float, g: float, t: float) -> float:
    """Displacement down an incline of angle `theta`."""
    return 0.5 * _slope_acceleration(theta, mu, g) * t * t


def oracle_slope_velocity(theta: float, mu: float, g: float, t: float) -> float:
    return _slope_acceleration(theta, mu, g) * t
