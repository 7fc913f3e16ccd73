import timeit

import numpy as np

from pbdr.benchmark.scenes import build_scene
from pbdr.config import SolverConfig, default_test_spec
from pbdr.solver import step

spec = default_test_spec(1, n_per_axis=8)

pbd_config = SolverConfig.for_solver("pbd")
pbd_scene = build_scene(spec, pbd_config).scene

pbdr_config = SolverConfig.for_solver("pbdr")
pbdr_scene = build_scene(spec, pbdr_config).scene

print("Spheres:", len(pbd_scene.particles), "precision:", np.dtype(pbd_config.dtype))

# first step settles the contacts
step(pbd_scene, pbd_config)
step(pbdr_scene, pbdr_config)

pbd_time = timeit.timeit(
    "step(pbd_scene, pbd_config)", number=200, globals=globals()
)
print("PBD:", pbd_time)

pbdr_time = timeit.timeit(
    "step(pbdr_scene, pbdr_config)", number=200, globals=globals()
)
print("PBD-R:", pbdr_time)

print(f"The momentum fixes make a substep {pbdr_time / pbd_time} times slower.")
