"""Supervised discrete hashing toolkit.

Learns compact binary codes from labeled features with either a single-pass
closed-form code update (fsdh) or the bit-by-bit coordinate-descent baseline
(sdh), then serves exact Hamming-space retrieval with the usual evaluation
metrics and a replace-one stability harness.
"""

from .baselines import random_projection_codes
from .dataset import (
    AnchorSet,
    SplitResult,
    load_features,
    load_labels,
    one_hot_encode,
    sample_anchors,
    save_features,
    split,
)
from .errors import (
    CorruptModelError,
    DhashError,
    NumericError,
    ParseError,
    ValidationError,
)
from .fsdh import HashModel, TrainConfig, TrainTrace, b_step, encode, f_step, g_step, objective, train
from .hamming import (
    PackedIndex,
    hamming_distance,
    load_codes,
    pack_codes,
    radius_lookup,
    rank_top_n,
    save_codes,
    sign_codes,
    unpack_codes,
)
from .metrics import (
    MetricsReport,
    accuracy_1nn,
    average_precision,
    evaluate,
    f_measure,
    lookup_prf,
    mean_average_precision,
    precision_at_n,
    timing_report,
)
from .model_io import load_model, save_model
from .rbf import RbfMap, embed, fit_sigma
from .sdh import DccConfig, sdh_b_step_dcc, sdh_g_step, sdh_objective, sdh_train
from .stability import (
    StabilityConfig,
    StabilityReport,
    check_g_step_stability,
    normalized_objective,
    perturb_sample,
    run_sweep,
)
from .synth import ClusterMixture, SynthSpec, generate, make_mixture, parse_synth_spec

__version__ = "0.1.0"
