"""Pose-selective max pooling for video identity similarity."""

from .errors import (
    DataValidationError,
    InvalidArgumentError,
    PosepoolError,
    UndefinedObjectiveError,
    VideoNotFoundError,
)
from .pose_select import (
    DEFAULT_K,
    ClusterModel,
    KChoice,
    PoseSet,
    SelectionMask,
    cluster_poses,
    objective_ratio,
    select_frames,
    select_k,
    select_key_frames,
)
from .similarity import (
    FeatureBag,
    correlation_matrix,
    max_correlation_similarity,
    normalize_feature,
    pooled_similarity,
    subset_bag,
)
from .verify import (
    PairRecord,
    RocCurve,
    ScoreRecord,
    accuracy_at_best_threshold,
    roc_curve,
    score_pairs,
    sweep_k,
)

__version__ = "0.1.0"
