"""Near-field channel estimation for widely-spaced multi-subarray arrays.

The package bundles the array geometry and wavefront models, the sparse
channel dictionaries, combiner generation and pilot acquisition, four
greedy estimators plus an oracle bound, and a seeded Monte-Carlo benchmark
harness with a CLI front end (``wsmsce``).
"""

import os as _os

# The estimators work on small matrices where BLAS thread pools only add
# contention; keep runs single-threaded unless the user overrides.  Takes
# effect only when this package is imported before numpy initializes BLAS.
_os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
_os.environ.setdefault("MKL_NUM_THREADS", "1")

from .dictionary import (
    AngleGrid,
    AngularDictionary,
    DistanceGrid,
    InterSubDictionary,
    Pad2dDictionary,
    PdDictionary,
    build_angular_dictionary,
    build_intersub_dictionary,
    build_pad2d_dictionary,
    build_pd_dictionary,
    make_angle_grid,
    make_distance_grid,
)
from .errors import DictionaryBudgetError, SingularSystemError
from .estimators import (
    MAD_OMP,
    METHODS,
    OLS,
    PAD2D_OMP,
    PD_OMP,
    TS_PAD_OMP,
    EstimationResult,
    EstimatorConfig,
    MadSubResult,
    mad_omp,
    nmse,
    ols_oracle,
    omp,
    pad2d_omp,
    pd_omp,
    ts_pad_omp,
)
from .geometry import (
    MODEL_CROSS,
    MODEL_EXACT,
    ArrayConfig,
    ChannelRealization,
    PathSet,
    fraunhofer_distance,
    steering_crossfield,
    steering_exact,
    steering_intersub,
    steering_subarray,
    synth_channel,
)
from .harness import (
    ScenarioConfig,
    SweepResult,
    TrialRecord,
    emit_csv,
    emit_json,
    load_json,
    parse_config_file,
    run_trial,
    sweep,
)
from .measurement import (
    CombinerMatrix,
    Observation,
    acquire,
    optimized_combiner,
    random_combiner,
    snr_to_noise_variance,
    total_coherence,
    unconstrained_combiner,
)

__version__ = "0.1.0"
