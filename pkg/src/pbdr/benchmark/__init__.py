from pbdr.benchmark.oracles import (
    InvalidMomentError,
    oracle_rotation,
    oracle_slope,
    oracle_translation,
)
from pbdr.benchmark.pushing import (
    ContactLostError,
    PushOutsideLimitSurfaceError,
    PushState,
    oracle_push_step,
)
from pbdr.benchmark.runner import RunResult, TrajectoryFrame, run_test
from pbdr.benchmark.studies import (
    measure_runtime,
    run_ablation,
    run_resolution_study,
    run_sweep,
)
