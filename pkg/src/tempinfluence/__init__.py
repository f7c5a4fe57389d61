"""Time-constrained social influence over retweet activity logs."""

__version__ = "0.1.0"

from .activity_log import ActivityLog, ActivityRecord, FilterSpec, LogParseError, compute_stats, parse_log, read_log
from .analysis import GainGrid, SweepConfig, pearson, probability_curve, sweep_grid
from .features import FEATURE_NAMES, FeatureConfig, SampleContext, TemporalFeatureExtractor, compute_all
from .learning import (
    DegenerateDataError,
    GiniRandomForestClassifier,
    GradientLogisticRegression,
    LabeledMatrix,
    Metrics,
    chronological_split,
    evaluate,
)
from .pipeline import compare_constraints, train_eval
from .sampling import SampleSet, build_balanced_set
from .synthgen import GenParams, generate
from .temporal_graph import TemporalIndex, TimeConstraints, active_neighbors, build_index, neighbors

__all__ = [
    "ActivityLog",
    "ActivityRecord",
    "FilterSpec",
    "LogParseError",
    "compute_stats",
    "parse_log",
    "read_log",
    "GainGrid",
    "SweepConfig",
    "pearson",
    "probability_curve",
    "sweep_grid",
    "FEATURE_NAMES",
    "FeatureConfig",
    "SampleContext",
    "TemporalFeatureExtractor",
    "compute_all",
    "DegenerateDataError",
    "GiniRandomForestClassifier",
    "GradientLogisticRegression",
    "LabeledMatrix",
    "Metrics",
    "chronological_split",
    "evaluate",
    "compare_constraints",
    "train_eval",
    "SampleSet",
    "build_balanced_set",
    "GenParams",
    "generate",
    "TemporalIndex",
    "TimeConstraints",
    "active_neighbors",
    "build_index",
    "neighbors",
]
