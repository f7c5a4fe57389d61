"""Sampling, chronological split, feature extraction and classification in one pass."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activity_log import ActivityLog, FilterSpec
from .features import FEATURE_NAMES, TemporalFeatureExtractor
from .learning import (
    DegenerateDataError,
    GiniRandomForestClassifier,
    GradientLogisticRegression,
    Metrics,
    chronological_order,
    evaluate,
)
from .sampling import build_balanced_set
from .temporal_graph import TemporalIndex, TimeConstraints, build_index

__all__ = ["CLASSIFIERS", "make_classifier", "EvalResult", "train_eval", "ComparisonRow", "compare_constraints", "format_table"]

CLASSIFIERS = ("forest", "logistic")


def make_classifier(name: str, seed: int = 0, n_jobs: int = 1, **params):
    if name == "forest":
        return GiniRandomForestClassifier(random_state=seed, n_jobs=n_jobs, **params)
    if name == "logistic":
        return GradientLogisticRegression(**params)
    raise ValueError(f"unknown classifier {name!r}; choose from {CLASSIFIERS}")


@dataclass
class EvalResult:
    metrics: Metrics
    features: list[str]
    n_train: int
    n_test: int
    model: object = field(repr=False, default=None)


def _hours_param(h):
    return None if math.isinf(h) else h


def train_eval(
    log: ActivityLog,
    tc: TimeConstraints,
    feature_sets: dict[str, list[str]] | None = None,
    *,
    classifier: str = "forest",
    classifier_params: dict | None = None,
    extractor_params: dict | None = None,
    filter: FilterSpec | None = None,
    ratio: float = 0.9,
    seed: int = 0,
    n_jobs: int = 1,
    index: TemporalIndex | None = None,
) -> dict[str, EvalResult]:
    """Fit and score one classifier per named feature set under ``tc``.

    Samples are drawn once; the feature extractor is fitted on the
    training period only.  ``feature_sets`` defaults to every single
    feature plus ``"all"``.
    """
    if feature_sets is None:
        feature_sets = {n: [n] for n in FEATURE_NAMES}
        feature_sets["all"] = list(FEATURE_NAMES)
    if not feature_sets:
        raise ValueError("no feature sets requested")
    index = index if index is not None else build_index(log)
    samples = build_balanced_set(index, log, filter, tc, seed, n_jobs=n_jobs)
    if len(samples) < 2:
        raise DegenerateDataError(f"only {len(samples)} samples under {tc}")
    train_idx, test_idx = chronological_order(samples.times, ratio)
    contexts = samples.to_contexts()
    labels = samples.labels
    train_ctx = [contexts[i] for i in train_idx]
    test_ctx = [contexts[i] for i in test_idx]

    needed = [n for n in FEATURE_NAMES if any(n in fs for fs in feature_sets.values())]
    extractor = TemporalFeatureExtractor(
        log, _hours_param(tc.tau_sus), _hours_param(tc.tau_fos), features=needed, **(extractor_params or {})
    )
    X_train = extractor.fit(train_ctx).transform(train_ctx)
    X_test = extractor.transform(test_ctx)
    y_train, y_test = labels[train_idx], labels[test_idx]
    if len(np.unique(y_train)) < 2 and classifier == "logistic":
        raise DegenerateDataError("training period holds a single class")

    out = {}
    for name, cols in feature_sets.items():
        unknown = [c for c in cols if c not in FEATURE_NAMES]
        if unknown:
            raise ValueError(f"unknown features {unknown}")
        pick = [needed.index(c) for c in cols]
        model = make_classifier(classifier, seed, n_jobs, **(classifier_params or {}))
        model.fit(X_train[:, pick], y_train)
        out[name] = EvalResult(evaluate(model, X_test[:, pick], y_test), list(cols), len(train_idx), len(test_idx), model)
    return out


@dataclass(frozen=True)
class ComparisonRow:
    feature: str
    tau_sus: float
    tau_fos: float
    f1_constrained: float
    f1_unconstrained: float

    @property
    def improvement_pct(self) -> float:
        if self.f1_unconstrained == 0:
            return math.nan
        return 100.0 * (self.f1_constrained - self.f1_unconstrained) / self.f1_unconstrained

    def to_dict(self) -> dict:
        imp = self.improvement_pct
        return {
            "feature": self.feature,
            "tau_sus": _hours_param(self.tau_sus),
            "tau_fos": _hours_param(self.tau_fos),
            "f1_constrained": self.f1_constrained,
            "f1_unconstrained": self.f1_unconstrained,
            "improvement_pct": None if math.isnan(imp) else imp,
        }


def compare_constraints(log, tc: TimeConstraints, feature_sets=None, **kwargs):
    """Run :func:`train_eval` under ``tc`` and with no constraints.

    Returns ``(rows, constrained_results, unconstrained_results)``.
    """
    index = kwargs.pop("index", None) or build_index(log)
    with_tc = train_eval(log, tc, feature_sets, index=index, **kwargs)
    without = train_eval(log, TimeConstraints.unconstrained(), feature_sets, index=index, **kwargs)
    rows = [
        ComparisonRow(name, tc.tau_sus, tc.tau_fos, with_tc[name].metrics.f1, without[name].metrics.f1)
        for name in with_tc
    ]
    return rows, with_tc, without


def format_table(rows: list[ComparisonRow]) -> str:
    """Plain-text table: feature, tc pair, F1 with and without constraints, improvement %."""
    header = f"{'feature':<8} {'tc (h)':>10} {'F1 w/ tc':>9} {'F1 w/o':>9} {'impr %':>8}"
    lines = [header, "-" * len(header)]
    for r in rows:
        imp = r.improvement_pct
        tc = f"({_h(r.tau_sus)},{_h(r.tau_fos)})"
        imp_s = "n/a" if math.isnan(imp) else f"{imp:+.2f}"
        lines.append(f"{r.feature:<8} {tc:>10} {r.f1_constrained:>9.3f} {r.f1_unconstrained:>9.3f} {imp_s:>8}")
    return "\n".join(lines) + "\n"


def _h(x):
    if math.isinf(x):
        return "inf"
    return str(int(x)) if float(x).is_integer() else f"{x:g}"
