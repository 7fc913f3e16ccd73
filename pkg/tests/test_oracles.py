import math

import pytest

from pbdr.benchmark.oracles import (
    InvalidMomentError,
    oracle_rotation,
    oracle_rotation_rate,
    oracle_slope,
    oracle_slope_velocity,
    oracle_translation,
    oracle_translation_velocity,
)
from pbdr.geometry.mesh import solid_box_inertia

G = 9.81


@pytest.mark.parametrize(
    "force, mu, t, expected",
    [
        (17.0, 0.4, 10.0, 16.30),
        (17.0, 0.0, 2.0, 8.5),
        (15.0, 0.4, 10.0, 0.0),
        (0.0, 0.0, 10.0, 0.0),
    ],
)
def test_translation(force, mu, t, expected):
    assert oracle_translation(force, mu, 4.0, G, t) == pytest.approx(expected, abs=5e-3)


def test_translation_velocity_is_the_derivative():
    assert oracle_translation_velocity(17.0, 0.4, 4.0, G, 10.0) == pytest.approx(3.26)


def test_rotation_of_the_torqued_box():
    moment = solid_box_inertia(4.0, (0.1, 0.1, 0.1))[2, 2]

    assert oracle_rotation(0.01, moment, 10.0) == pytest.approx(18.75)
    assert oracle_rotation_rate(0.01, moment, 10.0) == pytest.approx(3.75)


@pytest.mark.parametrize("moment", [0.0, -1.0, math.nan])
def test_rotation_needs_a_positive_moment(moment):
    with pytest.raises(InvalidMomentError):
        oracle_rotation(0.01, moment, 1.0)


@pytest.mark.parametrize(
    "mu, t, expected",
    [
        (0.4, 10.0, 6.44),
        (0.0, 1.0, 1.877),
        (0.5, 10.0, 0.0),
    ],
)
def test_slope(mu, t, expected):
    assert oracle_slope(math.pi / 8.0, mu, G, t) == pytest.approx(expected, abs=5e-3)


def test_slope_at_the_friction_angle_sticks():
    assert oracle_slope(math.atan(0.4), 0.4, G, 10.0) == pytest.approx(0.0, abs=1e-12)
    assert oracle_slope_velocity(math.atan(0.4), 0.4, G, 10.0) == pytest.approx(0.0, abs=1e-12)
