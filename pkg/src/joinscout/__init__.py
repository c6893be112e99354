"""Join discovery for repositories of tabular files.

Profiles string attributes, scores how well attribute pairs would join
(exactly from the data, or predicted from profiles alone), and ranks
joinable candidates for a query attribute.
"""

from .comparison import (
    LAYOUT_VERSION,
    NORMALIZED_FEATURES,
    RAW_FEATURES,
    VECTOR_ARITY,
    VECTOR_LAYOUT,
    NormalizationStats,
    ProfilePairVectorizer,
    compute_normalization,
    distance_vector,
    zscore,
)
from .discovery import (
    GroundTruthEntry,
    ProfileStore,
    RankedCandidate,
    Ranking,
    discover_by_attribute,
    evaluate_threshold_classifier,
    generate_ground_truth,
    index_repository,
    load_pool,
    load_repository,
    ranking_metrics,
    read_ground_truth,
    vectors_and_labels,
    write_ground_truth,
)
from .exceptions import (
    ClampedValueWarning,
    DegenerateFitWarning,
    IndexingError,
    JoinscoutError,
    LayoutMismatchError,
    ModelFormatError,
    ParseError,
    ProfilingError,
    TrainingDivergenceError,
    UnknownAttributeError,
)
from .io import (
    Column,
    Dataset,
    load_dataset,
    preprocess_column,
    preprocess_value,
    string_columns,
)
from .metrics import (
    STRICTNESS_OFFSETS,
    FitGrid,
    FitResult,
    FittedParams,
    QualityScore,
    cardinality_proportion,
    containment,
    continuous_quality,
    discrete_level,
    discrete_quality,
    empirical_cdf,
    fit_distribution,
    jaccard,
    load_default_params,
    load_params,
    save_params,
    truncated_normal_cdf,
    value_set,
    wasserstein_1d,
)
from .profiling import (
    DATA_TYPES,
    SPECIFIC_TYPES,
    AttributeProfile,
    BinaryFeatures,
    binary_features,
    build_profile,
    infer_data_type,
    infer_specific_type,
    levenshtein_name_distance,
    load_profiles,
    profile_from_dict,
    profile_to_dict,
    save_profiles,
    soundex,
)
from .regressor import (
    JoinQualityRegressor,
    evaluate_regression,
    forward,
    init_weights,
    load_model,
    load_training_corpus,
    loss_and_gradients,
    save_model,
    save_training_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeProfile",
    "BinaryFeatures",
    "ClampedValueWarning",
    "Column",
    "DATA_TYPES",
    "Dataset",
    "DegenerateFitWarning",
    "FitGrid",
    "FitResult",
    "FittedParams",
    "GroundTruthEntry",
    "IndexingError",
    "JoinQualityRegressor",
    "JoinscoutError",
    "LAYOUT_VERSION",
    "NORMALIZED_FEATURES",
    "RAW_FEATURES",
    "LayoutMismatchError",
    "ModelFormatError",
    "NormalizationStats",
    "ParseError",
    "ProfilePairVectorizer",
    "ProfileStore",
    "ProfilingError",
    "QualityScore",
    "RankedCandidate",
    "Ranking",
    "SPECIFIC_TYPES",
    "STRICTNESS_OFFSETS",
    "TrainingDivergenceError",
    "UnknownAttributeError",
    "VECTOR_ARITY",
    "VECTOR_LAYOUT",
    "binary_features",
    "build_profile",
    "cardinality_proportion",
    "compute_normalization",
    "containment",
    "continuous_quality",
    "discover_by_attribute",
    "discrete_level",
    "discrete_quality",
    "distance_vector",
    "empirical_cdf",
    "evaluate_regression",
    "evaluate_threshold_classifier",
    "fit_distribution",
    "forward",
    "generate_ground_truth",
    "index_repository",
    "infer_data_type",
    "infer_specific_type",
    "init_weights",
    "jaccard",
    "levenshtein_name_distance",
    "load_dataset",
    "load_default_params",
    "load_model",
    "load_params",
    "load_pool",
    "load_profiles",
    "load_repository",
    "load_training_corpus",
    "loss_and_gradients",
    "preprocess_column",
    "preprocess_value",
    "profile_from_dict",
    "profile_to_dict",
    "ranking_metrics",
    "read_ground_truth",
    "save_model",
    "save_params",
    "save_profiles",
    "save_training_corpus",
    "soundex",
    "string_columns",
    "truncated_normal_cdf",
    "value_set",
    "vectors_and_labels",
    "wasserstein_1d",
    "write_ground_truth",
    "zscore",
]
