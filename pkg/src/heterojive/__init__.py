"""Weighted two-stage spectral estimation of joint subspaces across views.

Multiple data matrices sharing rows are modeled as a common low-rank signal
plus per-view individual signal plus noise. The estimators here recover the
shared subspace by aggregating per-view spectral estimates with weights that
adapt to each view's noise level and geometry.
"""

from .config import (
    ConfigError,
    ExperimentConfig,
    cell_seed,
    config_hash,
    load_config,
    parse_config_mapping,
)
from .estimators import (
    AJIVE,
    AggregationResult,
    HeteroJIVE,
    JiveFit,
    StackSVD,
    StageOneResult,
    aggregate_weighted,
    equal_weights,
    extract_components,
    heterojive,
    stack_svd,
    stage1_extract,
)
from .harness import (
    ResultRow,
    SummaryRow,
    oracle_inputs,
    run_cell,
    run_simulation,
    summarize,
    write_results_csv,
    write_summary_csv,
)
from .exceptions import (
    BoundaryPoint,
    DegenerateAggregation,
    DegenerateInput,
    InvalidInput,
    JiveError,
    RankDeficient,
    ThetaTooSmall,
)
from .linalg import (
    SpectrumSlice,
    complement_basis,
    haar_orthonormal,
    operator_norm,
    principal_angle_delta,
    projector_distance,
    sample_in_complement,
    thin_svd,
    top_r_eigvecs_sym,
)
from .metrics import LabeledEmbedding, subspace_error, swiss_score
from .model import (
    JiveGroundTruth,
    LoadingScheme,
    MultiViewData,
    RankSpec,
    build_ground_truth,
    generate_loadings,
    generate_subspaces,
    realized_theta,
    synthesize_views,
)
from .weighting import (
    DiagnosticMaps,
    MkStats,
    PluginDiagnostics,
    WeightTrace,
    cost_vector,
    data_driven_weights,
    epsilon_k,
    mk_stats,
    objective_J,
    oracle_iterate,
    plugin_fit,
    reweight_step,
    stationarity_bound,
    stationarity_check,
    theta_of_w,
)

__version__ = "0.1.0"

__all__ = [
    "AJIVE",
    "AggregationResult",
    "BoundaryPoint",
    "ConfigError",
    "DegenerateAggregation",
    "DegenerateInput",
    "DiagnosticMaps",
    "ExperimentConfig",
    "HeteroJIVE",
    "InvalidInput",
    "JiveError",
    "JiveFit",
    "JiveGroundTruth",
    "LabeledEmbedding",
    "LoadingScheme",
    "MkStats",
    "MultiViewData",
    "PluginDiagnostics",
    "RankDeficient",
    "RankSpec",
    "ResultRow",
    "SpectrumSlice",
    "StackSVD",
    "StageOneResult",
    "SummaryRow",
    "ThetaTooSmall",
    "WeightTrace",
    "aggregate_weighted",
    "build_ground_truth",
    "cell_seed",
    "complement_basis",
    "config_hash",
    "cost_vector",
    "data_driven_weights",
    "epsilon_k",
    "equal_weights",
    "extract_components",
    "generate_loadings",
    "generate_subspaces",
    "haar_orthonormal",
    "heterojive",
    "load_config",
    "mk_stats",
    "objective_J",
    "operator_norm",
    "oracle_inputs",
    "oracle_iterate",
    "parse_config_mapping",
    "plugin_fit",
    "principal_angle_delta",
    "projector_distance",
    "realized_theta",
    "reweight_step",
    "run_cell",
    "run_simulation",
    "sample_in_complement",
    "stack_svd",
    "stage1_extract",
    "stationarity_bound",
    "stationarity_check",
    "subspace_error",
    "summarize",
    "swiss_score",
    "synthesize_views",
    "theta_of_w",
    "thin_svd",
    "top_r_eigvecs_sym",
    "write_results_csv",
    "write_summary_csv",
    "__version__",
]
