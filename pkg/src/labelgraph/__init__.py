"""labelgraph: k-NN similarity graphs and label propagation for
human-in-the-loop annotation, label-error detection, and learning under
label noise."""

from .errors import (
    DegenerateNodeError,
    FormatError,
    IntegrityError,
    LabelGraphError,
    NotFoundError,
    ParameterError,
)
from .estimator import GraphLabelPropagation
from .features import FeatureMatrix, read_features, read_features_path, write_features
from .graph import KnnGraph, build_knn_graph, cosine_similarity, load_graph, normalize_symmetric, save_graph
from .propagation import (
    DEFAULT_ITERATIONS,
    UNDETERMINED,
    LabelState,
    SoftLabelMatrix,
    init_label_matrix,
    label_error_scores,
    label_file_lines,
    propagate,
    propagate_steps,
    pseudo_labels,
    read_label_file,
    soft_label_lines,
    weighted_knn_classify,
)
from .session import Session, SessionStore
from .workflows import (
    ActiveLearningConfig,
    NoiseExperimentConfig,
    NoiseStudyResult,
    carve_eval_split,
    inject_noise,
    make_blobs,
    noise_level,
    run_active_learning,
    run_noise_study,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveLearningConfig",
    "DEFAULT_ITERATIONS",
    "DegenerateNodeError",
    "FeatureMatrix",
    "FormatError",
    "GraphLabelPropagation",
    "IntegrityError",
    "KnnGraph",
    "LabelGraphError",
    "LabelState",
    "NoiseExperimentConfig",
    "NoiseStudyResult",
    "NotFoundError",
    "ParameterError",
    "SoftLabelMatrix",
    "UNDETERMINED",
    "build_knn_graph",
    "carve_eval_split",
    "cosine_similarity",
    "init_label_matrix",
    "inject_noise",
    "label_error_scores",
    "label_file_lines",
    "load_graph",
    "make_blobs",
    "noise_level",
    "normalize_symmetric",
    "propagate",
    "propagate_steps",
    "pseudo_labels",
    "read_features",
    "read_features_path",
    "read_label_file",
    "run_active_learning",
    "run_noise_study",
    "save_graph",
    "Session",
    "SessionStore",
    "soft_label_lines",
    "weighted_knn_classify",
    "write_features",
]
