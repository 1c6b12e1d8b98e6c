"""Constrained K-dimensional coding in finite-dimensional Hilbert space.

Encode points of the unit ball as short coefficient vectors through a
column-constrained linear map, train such maps by empirical risk
minimization, evaluate closed-form uniform deviation bounds on the
generalization gap, and check those bounds by Monte-Carlo experiment.
"""

from .core import (
    TOL,
    Code,
    DataPoint,
    Dataset,
    DatasetFormatError,
    DatasetParseError,
    Dictionary,
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidDictionaryError,
    SchemeKind,
    SchemeSpec,
    Tolerances,
    as_coords,
    class_norm,
    codebook_norm,
    code_in_codebook,
    derive_seed,
    load_dataset,
    load_dictionary,
    save_dictionary,
)
from .encoders import (
    EncodeResult,
    empirical_risk,
    encode,
    encode_kmeans,
    encode_lp_ball,
    encode_nnls,
    encode_pca,
    oracle_encode,
    project_l1_ball,
    project_l2_ball,
    project_lp_ball,
    range_bound,
)
from .trainers import (
    DegenerateInitError,
    InitKind,
    NegativeDataError,
    TrainConfig,
    TrainReport,
    train,
    train_kmeans,
    train_nmf,
    train_pca,
    train_sparse,
)
from .bounds import (
    BoundReport,
    BoundRequest,
    evaluate_bounds,
    finite_dim_bound,
    kmeans_bound,
    nmf_bound,
    pca_bound,
    pca_rademacher,
    request_for_scheme,
    sparse_bound,
    theorem1_bound,
    theorem2_bound,
)
from .harness import (
    ExperimentResult,
    SamplerKind,
    SamplerSpec,
    deviation_bound_for_scheme,
    deviation_experiment_from_config,
    random_dictionary,
    run_bound_curve,
    run_deviation_experiment,
    sample,
    write_curve_csv,
    write_deviation_csv,
)

__version__ = "0.1.0"
