from pbdr.benchmark.oracles import InvalidMomentError
from pbdr.benchmark.pushing import ContactLostError
from pbdr.benchmark.runner import run_test
from pbdr.body import (
    Body,
    MomentumState,
    Particle,
    ParticleState,
    compute_com,
    compute_inertia,
    compute_momentum,
    extract_pose,
)
from pbdr.config import SolverConfig, TestSpec, default_test_spec
from pbdr.config_reasons import ConfigError
from pbdr.geometry.mesh import MeshFormatError, TriMesh, point_in_mesh
from pbdr.geometry.packing import (
    EmptyPackingError,
    SpherePacking,
    pack_box,
    pack_mesh,
    pack_rod,
)
from pbdr.math3d import DegenerateConfigurationError, RankDeficientError, Rotation
from pbdr.scene import ForceProgram, Plane, Scene, SceneBuilder
from pbdr.solver import Simulation, SimulationError, step
