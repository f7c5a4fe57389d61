"""Adoption-probability curves, Pearson correlation and the (tau_sus, tau_fos) gain grid."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .activity_log import ActivityLog, FilterSpec
from .features import FEATURE_NAMES, INTEGER_FEATURES, FeatureConfig, compute_selected, estimate_sigma
from .sampling import SampleSet, build_balanced_set
from .temporal_graph import TemporalIndex, TimeConstraints

__all__ = [
    "TAU_GRID",
    "UndefinedCorrelationError",
    "CurvePoint",
    "ProbabilityCurve",
    "probability_curve",
    "pearson",
    "SweepConfig",
    "GainGrid",
    "cell_seed",
    "cell_samples",
    "cell_curve",
    "evaluate_cell",
    "sweep_grid",
]

# hours
TAU_GRID = (8, 16, 24, 48, 72, 96, 120, 144, 168, 336, 504, 720)


class UndefinedCorrelationError(ValueError):
    """Pearson correlation is undefined (too few points or a constant input)."""


@dataclass(frozen=True)
class CurvePoint:
    value: float
    probability: float
    support: int


@dataclass
class ProbabilityCurve:
    points: list[CurvePoint] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=float)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p.probability for p in self.points], dtype=float)


def probability_curve(
    samples: SampleSet | Sequence[int],
    values: Sequence[float],
    binning: str = "auto",
    n_bins: int = 20,
    min_support: int = 5,
) -> ProbabilityCurve:
    """Share of positives per feature value.

    ``binning="exact"`` groups identical values, ``"width"`` uses ``n_bins``
    equal-width bins over the observed range (points sit at bin centres),
    ``"auto"`` picks exact for integer-valued data.  Groups with fewer than
    ``min_support`` samples are dropped.
    """
    labels = samples.labels if isinstance(samples, SampleSet) else np.asarray(samples, dtype=int)
    x = np.asarray(values, dtype=float)
    if len(labels) != len(x):
        raise ValueError(f"{len(x)} values for {len(labels)} samples")
    if len(x) == 0:
        return ProbabilityCurve()
    if binning == "auto":
        binning = "exact" if np.all(np.mod(x, 1) == 0) else "width"
    if binning == "exact":
        keys, inverse = np.unique(x, return_inverse=True)
        centers = keys
    elif binning == "width":
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            inverse = np.zeros(len(x), dtype=int)
            centers = np.array([lo])
        else:
            edges = np.linspace(lo, hi, n_bins + 1)
            inverse = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
            centers = (edges[:-1] + edges[1:]) / 2
    else:
        raise ValueError(f"unknown binning {binning!r}")
    support = np.bincount(inverse, minlength=len(centers))
    positives = np.bincount(inverse, weights=labels, minlength=len(centers))
    points = [
        CurvePoint(float(centers[k]), float(positives[k] / support[k]), int(support[k]))
        for k in range(len(centers))
        if support[k] >= min_support and support[k] > 0
    ]
    return ProbabilityCurve(points)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-d sequences of equal length")
    if len(x) < 2:
        raise UndefinedCorrelationError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero variance")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class SweepConfig:
    tau_values: tuple = TAU_GRID
    baseline: tuple = (720, 720)
    feature_config: FeatureConfig = FeatureConfig()
    correlation: str = "curve"
    binning: str = "auto"
    n_bins: int = 20
    min_support: int = 5
    literal: bool = False
    exposed_only: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.correlation not in ("curve", "sample"):
            raise ValueError(f"correlation must be 'curve' or 'sample', got {self.correlation!r}")
        if not self.tau_values or any(not t > 0 for t in self.tau_values):
            raise ValueError("tau_values must be a non-empty list of positive hours")


@dataclass
class GainGrid:
    """Correlation per cell (``rho[i, j]`` for tau_sus[i], tau_fos[j]) and gain over the baseline.

    Missing cells hold NaN.
    """

    tau_values: list[float]
    rho: np.ndarray
    gain: np.ndarray
    rho_base: float | None
    feature: str = "nan"
    baseline: tuple = (720, 720)
    support: np.ndarray | None = None

    def cell(self, tau_sus, tau_fos) -> tuple[float, float]:
        i, j = self.tau_values.index(tau_sus), self.tau_values.index(tau_fos)
        return float(self.rho[i, j]), float(self.gain[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau_sus", "tau_fos", "rho", "gain", "missing"])
        for i, ts in enumerate(self.tau_values):
            for j, tf in enumerate(self.tau_values):
                rho, gain = self.rho[i, j], self.gain[i, j]
                missing = bool(np.isnan(rho) or np.isnan(gain))
                w.writerow([_fmt(ts), _fmt(tf), _num(rho), _num(gain), int(missing)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "tau_values": [_fmt(t) for t in self.tau_values],
            "baseline": [_fmt(t) for t in self.baseline],
            "rho_base": self.rho_base,
            "rho": _matrix(self.rho),
            "gain": _matrix(self.gain),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _fmt(t):
    return int(t) if float(t).is_integer() else float(t)


def _num(x):
    return "" if np.isnan(x) else repr(float(x))


def _matrix(m):
    return [[None if np.isnan(v) else float(v) for v in row] for row in m]


def cell_seed(seed: int, tau_sus: float, tau_fos: float) -> int:
    """Per-cell sampling seed derived from the master seed and the cell's tau values."""
    ss = np.random.SeedSequence([int(seed), round(tau_sus * 1000), round(tau_fos * 1000)])
    return int(ss.generate_state(1)[0])


def cell_samples(index, log, filter, seed, tc, literal=False) -> SampleSet:
    return build_balanced_set(index, log, filter, tc, cell_seed(seed, tc.tau_sus, tc.tau_fos), literal=literal)


def _cell_values(index, log, feature, filter, seed, tc, config):
    samples = cell_samples(index, log, filter, seed, tc, config.literal)
    fc = config.feature_config
    rows = [compute_selected(index, s.context(), tc, fc, (feature, "nan")) for s in samples]
    labels = samples.labels
    values = np.array([r[0] for r in rows], dtype=float)
    if config.exposed_only and rows:
        # no active neighbour: every measure is 0 and only positives can land here
        keep = np.array([r[1] > 0 for r in rows])
        labels, values = labels[keep], values[keep]
    return samples, labels, values


def _curve(feature, labels, values, config):
    binning = config.binning
    if binning == "auto":
        binning = "exact" if feature in INTEGER_FEATURES else "width"
    return probability_curve(labels, values, binning, config.n_bins, config.min_support)


def cell_curve(
    index: TemporalIndex,
    log: ActivityLog,
    feature: str,
    filter: FilterSpec | None,
    seed: int,
    tc: TimeConstraints,
    config: SweepConfig = SweepConfig(),
) -> ProbabilityCurve:
    """The adoption-probability curve a sweep cell correlates over."""
    _, labels, values = _cell_values(index, log, feature, filter, seed, tc, config)
    return _curve(feature, labels, values, config)


def evaluate_cell(
    index: TemporalIndex,
    log: ActivityLog,
    feature: str,
    filter: FilterSpec | None,
    seed: int,
    tc: TimeConstraints,
    config: SweepConfig,
) -> tuple[float, int]:
    """Correlation of ``feature`` with adoption under ``tc``; NaN when undefined.

    Returns ``(rho, number of samples)``.
    """
    samples, labels, values = _cell_values(index, log, feature, filter, seed, tc, config)
    try:
        if config.correlation == "sample":
            rho = pearson(values, labels)
        else:
            curve = _curve(feature, labels, values, config)
            rho = pearson(curve.values, curve.probabilities)
    except UndefinedCorrelationError:
        rho = math.nan
    return rho, len(samples)


def sweep_grid(
    index: TemporalIndex,
    log: ActivityLog,
    feature: str = "nan",
    filter: FilterSpec | None = None,
    seed: int = 0,
    config: SweepConfig = SweepConfig(),
) -> GainGrid:
    """Correlation and relative gain for every (tau_sus, tau_fos) pair of ``config.tau_values``.

    Gains are ``(rho - rho_base) / |rho_base|`` against the baseline cell
    (evaluated separately when it is not on the grid).  Each cell redraws
    its negatives with a seed derived from ``(seed, tau_sus, tau_fos)``.
    """
    if feature not in FEATURE_NAMES:
        raise ValueError(f"unknown feature {feature!r}")
    if feature == "cdi" and config.feature_config.sigma is None:
        sigma = estimate_sigma(log) if len(log) else 1.0
        config = replace(config, feature_config=replace(config.feature_config, sigma=sigma))
    taus = list(config.tau_values)
    cells = [(ts, tf) for ts in taus for tf in taus]
    base = tuple(config.baseline)
    jobs = cells if base in cells else cells + [base]

    def run(pair):
        return evaluate_cell(index, log, feature, filter, seed, TimeConstraints(*pair), config)

    if config.n_jobs == 1:
        results = [run(p) for p in jobs]
    else:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(evaluate_cell)(index, log, feature, filter, seed, TimeConstraints(*p), config) for p in jobs
        )
    by_cell = dict(zip(jobs, results))

    n = len(taus)
    rho = np.full((n, n), np.nan)
    support = np.zeros((n, n), dtype=int)
    for (ts, tf), (r, m) in by_cell.items():
        if (ts, tf) in cells:
            i, j = taus.index(ts), taus.index(tf)
            rho[i, j] = r
            support[i, j] = m
    rho_base = by_cell[base][0]
    if np.isnan(rho_base) or rho_base == 0:
        gain = np.full((n, n), np.nan)
        rho_base_out = None if np.isnan(rho_base) else 0.0
    else:
        gain = (rho - rho_base) / abs(rho_base)
        rho_base_out = float(rho_base)
    return GainGrid(taus, rho, gain, rho_base_out, feature, base, support)

