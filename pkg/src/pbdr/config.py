"""Solver and benchmark configuration models, with the default benchmark parameters."""

import math
from typing import ClassVar, Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

Precision = Literal["single", "double"]
VelocityUpdate = Literal["legacy", "incremental"]
Switch = Literal["on", "off"]
MomentumFixSchedule = Literal["per_iteration", "per_substep"]
SolverVariant = Literal["pbd", "pbdr"]
ObjectKind = Literal["box", "bunny", "rod+box"]
PusherMode = Literal["velocity", "force"]

GRAVITY = 9.81
BOX_MASS = 4.0
BUNNY_MASS = 2.18
ROD_MASS = 2.0
FRICTION = 0.4
TEST1_FORCE = 17.0
TEST4_FORCE = 10.0
TORQUE = 0.01
SLOPE = math.pi / 8.0
ROD_FORCE = 0.1
FRAMES = 1000
SEEDS = (0, 1, 2)
BOX_HALF_EXTENT = 0.1
BOX_N_PER_AXIS = 4
ROD_LENGTH = 0.4
ROD_RADIUS = 0.02
BUNNY_RADIUS = 0.005
PUSH_OFFSET = 0.25
PUSH_SPEED = 0.02
BUNNY_MESH = "bunny.obj"

TEST_NAMES: Dict[int, str] = {
    1: "pushed box",
    2: "box with torque",
    3: "box on slope",
    4: "pushed bunny",
    5: "bunny with torque",
    6: "bunny on slope",
    7: "rod pushing box",
}


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    frame_rate: float = Field(100.0, gt=0.0)
    substeps: int = Field(10, ge=1)
    solver_iterations: int = Field(10, ge=1)
    precision: Precision = "single"
    velocity_update: VelocityUpdate = "incremental"
    linear_momentum_fix: Switch = "on"
    angular_momentum_fix: Switch = "on"
    momentum_fix_schedule: MomentumFixSchedule = "per_iteration"
    gravity: float = Field(GRAVITY, ge=0.0)
    jitter: float = Field(1e-6, ge=0.0)
    contact_tolerance: float = Field(1e-12, ge=0.0)

    @classmethod
    def for_solver(cls, variant: SolverVariant, **overrides) -> "SolverConfig":
        if variant == "pbd":
            flags = dict(
                velocity_update="legacy",
                linear_momentum_fix="off",
                angular_momentum_fix="off",
            )
        elif variant == "pbdr":
            flags = dict(
                velocity_update="incremental",
                linear_momentum_fix="on",
                angular_momentum_fix="on",
            )
        else:
            raise ValueError(
                f"Unknown solver variant '{variant}', only 'pbd' and 'pbdr' exist."
            )
        return cls(**{**flags, **overrides})

    @property
    def dt(self) -> float:
        return 1.0 / (self.frame_rate * self.substeps)

    @property
    def frame_time(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self.precision == "single" else np.float64)

    @property
    def fixes_linear_momentum(self) -> bool:
        return self.linear_momentum_fix == "on"

    @property
    def fixes_angular_momentum(self) -> bool:
        return self.angular_momentum_fix == "on"

    @property
    def variant_name(self) -> str:
        flags = (
            self.velocity_update,
            self.linear_momentum_fix,
            self.angular_momentum_fix,
        )
        if flags == ("incremental", "on", "on"):
            return "pbdr"
        if flags == ("legacy", "off", "off"):
            return "pbd"
        return "custom(velocity={},linear={},angular={})".format(*flags)


class TestSpec(BaseModel):
    __test__: ClassVar[bool] = False
    model_config = ConfigDict(extra="forbid", frozen=True)

    test_id: int = Field(ge=1, le=7)
    obj: ObjectKind = "box"
    force: float = Field(0.0, ge=0.0)
    torque: float = 0.0
    mu: float = Field(FRICTION, ge=0.0)
    slope: float = Field(0.0, ge=0.0, lt=math.pi / 2.0)
    box_mass: float = Field(BOX_MASS, gt=0.0)
    bunny_mass: float = Field(BUNNY_MASS, gt=0.0)
    rod_mass: float = Field(ROD_MASS, gt=0.0)
    frames: int = Field(FRAMES, ge=1)
    n_per_axis: int = Field(BOX_N_PER_AXIS, ge=1)
    box_half_extent: float = Field(BOX_HALF_EXTENT, gt=0.0)
    bunny_radius: float = Field(BUNNY_RADIUS, gt=0.0)
    mesh: Optional[str] = None
    reference_resolution: Optional[float] = Field(None, gt=0.0)
    rod_length: float = Field(ROD_LENGTH, gt=0.0)
    rod_radius: float = Field(ROD_RADIUS, gt=0.0)
    push_offset: float = Field(PUSH_OFFSET, ge=-1.0, le=1.0)
    push_speed: float = Field(PUSH_SPEED, gt=0.0)
    pusher_mode: PusherMode = "velocity"
    contact_friction: float = Field(0.0, ge=0.0)
    seeds: Tuple[int, ...] = Field(SEEDS, min_length=1)

    @model_validator(mode="after")
    def _object_matches_test(self) -> "TestSpec":
        expected = expected_object(self.test_id)
        if self.obj != expected:
            raise ValueError(f"Test {self.test_id} uses a {expected}, not a {self.obj}")
        if self.obj == "rod+box" and self.rod_length < 2.0 * self.rod_radius:
            raise ValueError("rod_length must hold at least one sphere of rod_radius")
        return self

    @property
    def name(self) -> str:
        return TEST_NAMES[self.test_id]

    @property
    def mass(self) -> float:
        return self.bunny_mass if self.obj == "bunny" else self.box_mass

    @property
    def half_extents(self) -> Tuple[float, float, float]:
        return (self.box_half_extent,) * 3


def expected_object(test_id: int) -> ObjectKind:
    if test_id in (1, 2, 3):
        return "box"
    if test_id in (4, 5, 6):
        return "bunny"
    return "rod+box"


def default_test_spec(test_id: int, **overrides) -> TestSpec:
    """The benchmark's default parameters for one test, with overrides applied."""
    defaults: Dict[str, object] = {"test_id": test_id, "obj": expected_object(test_id)}
    if test_id == 1:
        defaults.update(force=TEST1_FORCE, mu=FRICTION)
    elif test_id == 4:
        defaults.update(force=TEST4_FORCE, mu=FRICTION)
    elif test_id in (2, 5):
        defaults.update(torque=TORQUE, mu=0.0)
    elif test_id in (3, 6):
        defaults.update(slope=SLOPE, mu=FRICTION)
    elif test_id == 7:
        defaults.update(force=ROD_FORCE, mu=FRICTION, contact_friction=FRICTION)
    else:
        raise ValueError(f"There is no test {test_id}, tests are numbered 1 to 7.")
    return TestSpec(**{**defaults, **overrides})
