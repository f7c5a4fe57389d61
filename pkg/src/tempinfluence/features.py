"""The ten influence measures over a sample's time-constrained neighbourhood.

A sample context ``(ego, source, topic, time)`` stands for the activity
"ego retweeted source on topic at time".  Every measure is built from the
ego's active neighbours for that topic at that time under the given
:class:`~tempinfluence.temporal_graph.TimeConstraints`:

=====  ==========================================================
nan    number of active neighbours
pne    active neighbours / neighbours
cdi    sum of exp(-(t_latest - t_u) / sigma) over adoption times
prr    earlier retweets from the ego to its active neighbours
clt    ordered active pairs (u, z) where u retweeted z on the topic
clc    clt / nan**2
hub    active neighbours retweeted at least ``gamma`` times
mur    active neighbours that retweeted the sample's source on the topic
acc    strongly connected components among active neighbours
acr    acc / components among all neighbours
=====  ==========================================================
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .activity_log import ActivityLog
from .scc import count_components
from .temporal_graph import (
    HOUR,
    ActiveNeighbor,
    TemporalIndex,
    TimeConstraints,
    active_neighbors,
    build_index,
    neighbors,
)

__all__ = [
    "FEATURE_NAMES",
    "INTEGER_FEATURES",
    "FeatureConfig",
    "SampleContext",
    "FeatureVector",
    "connectivity",
    "continuous_decay",
    "previous_reposts",
    "transitivity",
    "hubs",
    "mutual_reposts",
    "structural_diversity",
    "estimate_sigma",
    "compute_selected",
    "compute_all",
    "feature_rows",
    "check_contexts",
    "TemporalFeatureExtractor",
]

FEATURE_NAMES = ("nan", "pne", "cdi", "prr", "clt", "clc", "hub", "mur", "acc", "acr")
INTEGER_FEATURES = frozenset({"nan", "prr", "clt", "hub", "mur", "acc"})

MUR_TARGETS = ("source_vprime", "ego_v")
CLT_PAIR_MODES = ("ordered", "unordered_either_direction")
ACC_EDGE_SCOPES = ("any_topic", "same_topic")
HUB_SCOPES = ("causal", "global")


@dataclass(frozen=True)
class FeatureConfig:
    """Knobs for the measures.  ``sigma`` is in hours; None means "not yet estimated"."""

    sigma: float | None = None
    gamma: int = 104
    mur_target: str = "source_vprime"
    clt_pair_mode: str = "ordered"
    acc_edge_scope: str = "any_topic"
    hub_scope: str = "causal"

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma!r}")
        if int(self.gamma) != self.gamma or self.gamma < 1:
            raise ValueError(f"gamma must be an integer >= 1, got {self.gamma!r}")
        _check_choice("mur_target", self.mur_target, MUR_TARGETS)
        _check_choice("clt_pair_mode", self.clt_pair_mode, CLT_PAIR_MODES)
        _check_choice("acc_edge_scope", self.acc_edge_scope, ACC_EDGE_SCOPES)
        _check_choice("hub_scope", self.hub_scope, HUB_SCOPES)


def _check_choice(name, value, allowed):
    if value not in allowed:
        raise ValueError(f"{name} must be one of {allowed}, got {value!r}")


@dataclass(frozen=True)
class SampleContext:
    ego: str
    source: str
    topic: str
    time: int


@dataclass(frozen=True)
class FeatureVector:
    nan: float = 0.0
    pne: float = 0.0
    cdi: float = 0.0
    prr: float = 0.0
    clt: float = 0.0
    clc: float = 0.0
    hub: float = 0.0
    mur: float = 0.0
    acc: float = 0.0
    acr: float = 0.0

    def as_array(self, names: Sequence[str] = FEATURE_NAMES) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=float)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def _active(index, ctx, tc, active):
    if active is None:
        return active_neighbors(index, ctx.ego, ctx.topic, ctx.time, tc)
    return active


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def connectivity(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    active: Sequence[ActiveNeighbor] | None = None,
) -> tuple[int, float]:
    """``(nan, pne)``; pne is 0 when the ego has no neighbours at all."""
    active = _active(index, ctx, tc, active)
    nan = len(active)
    if nan == 0:
        return 0, 0.0
    hood = neighbors(index, ctx.ego, ctx.time, tc.tau_sus)
    return nan, _ratio(nan, len(hood))


def continuous_decay(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    config: FeatureConfig,
    active: Sequence[ActiveNeighbor] | None = None,
) -> float:
    if config.sigma is None:
        raise ValueError("continuous_decay needs config.sigma; see estimate_sigma()")
    active = _active(index, ctx, tc, active)
    if not active:
        return 0.0
    sigma = config.sigma * HOUR
    latest = max(a.adopt_time for a in active)
    return math.fsum(math.exp(-(latest - a.adopt_time) / sigma) for a in active)


def _own_tuple(index: TemporalIndex, ctx: SampleContext) -> int:
    # 1 if the sample's activity is itself a record of the log (positives), else 0
    return 1 if index.has_record(ctx.ego, ctx.source, ctx.topic, ctx.time) else 0


def previous_reposts(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    active: Sequence[ActiveNeighbor] | None = None,
) -> int:
    """Retweets from the ego to its active neighbours up to ``ctx.time``, any topic.

    The sample's own activity is not counted.
    """
    active = _active(index, ctx, tc, active)
    total = 0
    for a in active:
        total += index.count_pair_until(ctx.ego, a.user, ctx.time)
        if a.user == ctx.source:
            total -= _own_tuple(index, ctx)
    return total


def transitivity(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    config: FeatureConfig,
    active: Sequence[ActiveNeighbor] | None = None,
) -> tuple[int, float]:
    """``(clt, clc)`` from pairs of active neighbours linked by a topic retweet."""
    active = _active(index, ctx, tc, active)
    users = [a.user for a in active]
    n = len(users)
    if n < 2:
        return 0, 0.0
    closed = 0
    if config.clt_pair_mode == "ordered":
        for u in users:
            for z in users:
                if u != z and index.count_topic_pair_until(u, z, ctx.topic, ctx.time):
                    closed += 1
    else:
        for i in range(n):
            for j in range(i + 1, n):
                u, z = users[i], users[j]
                if index.count_topic_pair_until(u, z, ctx.topic, ctx.time) or index.count_topic_pair_until(
                    z, u, ctx.topic, ctx.time
                ):
                    closed += 1
    return closed, closed / (n * n)


def hubs(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    config: FeatureConfig,
    active: Sequence[ActiveNeighbor] | None = None,
) -> int:
    """Active neighbours retweeted at least ``gamma`` times (anyone, any topic).

    Tallies run up to ``ctx.time``, or over the whole log with ``hub_scope="global"``.
    """
    active = _active(index, ctx, tc, active)
    horizon = ctx.time if config.hub_scope == "causal" else math.inf
    count = 0
    for a in active:
        tally = index.count_retweeted_until(a.user, horizon)
        if a.user == ctx.source:
            tally -= _own_tuple(index, ctx)
        if tally >= config.gamma:
            count += 1
    return count


def mutual_reposts(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    config: FeatureConfig,
    active: Sequence[ActiveNeighbor] | None = None,
) -> int:
    active = _active(index, ctx, tc, active)
    target = ctx.source if config.mur_target == "source_vprime" else ctx.ego
    return sum(1 for a in active if index.count_topic_pair_until(a.user, target, ctx.topic, ctx.time))


def _successors(index: TemporalIndex, t: float, topic: str | None):
    def succ(u):
        times = index._out_times.get(u)
        if not times:
            return ()
        targets = index._out_sources[u][: bisect_right(times, t)]
        if topic is None:
            return targets
        return [z for z in set(targets) if index.count_topic_pair_until(u, z, topic, t)]

    return succ


def structural_diversity(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    config: FeatureConfig,
    active: Sequence[ActiveNeighbor] | None = None,
) -> tuple[int, float]:
    """``(acc, acr)``: SCC counts of the active set and of the full neighbourhood."""
    active = _active(index, ctx, tc, active)
    if not active:
        return 0, 0.0
    topic = ctx.topic if config.acc_edge_scope == "same_topic" else None
    succ = _successors(index, ctx.time, topic)
    acc = count_components(sorted(a.user for a in active), succ)
    hood = neighbors(index, ctx.ego, ctx.time, tc.tau_sus)
    if not hood:
        return acc, 0.0
    return acc, acc / count_components(sorted(hood), succ)


def estimate_sigma(log: ActivityLog, fallback: float = 1.0, index: TemporalIndex | None = None) -> float:
    """Longest adoption delay in the log, in hours.

    For every record ``(v, _, topic, t)`` the delay is ``t - t_u`` over the
    adoption times ``t_u`` of v's constraint-free active neighbours for
    ``topic`` at ``t``.  Returns ``fallback`` when no record has a
    positive delay.
    """
    if not len(log):
        raise ValueError("cannot estimate sigma from an empty log")
    if index is None:
        index = build_index(log)
    unconstrained = TimeConstraints.unconstrained()
    longest = 0
    seen = set()
    for r in log.records:
        key = (r.adopter, r.topic, r.time)
        if key in seen:
            continue
        seen.add(key)
        active = active_neighbors(index, r.adopter, r.topic, r.time, unconstrained)
        if active:
            delay = r.time - min(a.adopt_time for a in active)
            longest = max(longest, delay)
    if longest <= 0:
        return float(fallback)
    return longest / HOUR


def compute_selected(
    index: TemporalIndex,
    ctx: SampleContext,
    tc: TimeConstraints,
    config: FeatureConfig,
    names: Sequence[str] = FEATURE_NAMES,
) -> list[float]:
    """Values of the named measures only; skips the work the others would need."""
    active = active_neighbors(index, ctx.ego, ctx.topic, ctx.time, tc)
    if not active:
        return [0.0] * len(names)
    wanted = set(names)
    values: dict[str, float] = {}
    if wanted & {"nan", "pne"}:
        values["nan"], values["pne"] = connectivity(index, ctx, tc, active)
    if "cdi" in wanted:
        values["cdi"] = continuous_decay(index, ctx, tc, config, active)
    if "prr" in wanted:
        values["prr"] = previous_reposts(index, ctx, tc, active)
    if wanted & {"clt", "clc"}:
        values["clt"], values["clc"] = transitivity(index, ctx, tc, config, active)
    if "hub" in wanted:
        values["hub"] = hubs(index, ctx, tc, config, active)
    if "mur" in wanted:
        values["mur"] = mutual_reposts(index, ctx, tc, config, active)
    if wanted & {"acc", "acr"}:
        values["acc"], values["acr"] = structural_diversity(index, ctx, tc, config, active)
    return [float(values[n]) for n in names]


def compute_all(
    index: TemporalIndex, ctx: SampleContext, tc: TimeConstraints, config: FeatureConfig
) -> FeatureVector:
    return FeatureVector(*compute_selected(index, ctx, tc, config, FEATURE_NAMES))


def check_contexts(X) -> list[SampleContext]:
    """Coerce sample contexts: SampleContext objects, Sample-like objects, or 4-column rows."""
    if isinstance(X, SampleContext):
        raise TypeError("expected a sequence of sample contexts, got a single SampleContext")
    if hasattr(X, "to_contexts"):
        return X.to_contexts()
    if hasattr(X, "to_numpy") and not isinstance(X, np.ndarray):
        X = X.to_numpy(dtype=object)
    out = []
    for i, row in enumerate(X):
        if isinstance(row, SampleContext):
            out.append(row)
            continue
        if all(hasattr(row, a) for a in ("ego", "source", "topic", "time")):
            out.append(SampleContext(row.ego, row.source, row.topic, int(row.time)))
            continue
        row = list(row)
        if len(row) != 4:
            raise ValueError(f"row {i}: expected 4 columns (ego, source, topic, time), got {len(row)}")
        time = row[3]
        if isinstance(time, (float, np.floating)) and not float(time).is_integer():
            raise ValueError(f"row {i}: time {time!r} is not an integer number of seconds")
        out.append(SampleContext(str(row[0]), str(row[1]), str(row[2]), int(time)))
    return out


def _hours(value) -> float:
    if value is None:
        return math.inf
    return float(value)


class TemporalFeatureExtractor(TransformerMixin, BaseEstimator):
    """Transform sample contexts into influence-feature rows.

    Parameters
    ----------
    log : ActivityLog
        The activity log the neighbourhoods are read from.
    tau_sus, tau_fos : float or None
        Window lengths in hours; None (or inf) drops that constraint.
    sigma : float or None
        Decay scale for ``cdi`` in hours.  None estimates it during ``fit``.
    gamma : int
        Hub threshold.
    features : "all" or sequence of str
        Which columns to emit, in the given order.
    leakage_strict : bool
        When estimating sigma, only use records up to the latest fitted
        sample time, and count hub tallies causally.  Off: sigma and hub
        tallies use the whole log.

    Rows of ``X`` are ``(ego, source, topic, time)``.
    """

    def __init__(
        self,
        log=None,
        tau_sus=720.0,
        tau_fos=720.0,
        sigma=None,
        gamma=104,
        mur_target="source_vprime",
        clt_pair_mode="ordered",
        acc_edge_scope="any_topic",
        features="all",
        leakage_strict=True,
        sigma_fallback=1.0,
    ):
        self.log = log
        self.tau_sus = tau_sus
        self.tau_fos = tau_fos
        self.sigma = sigma
        self.gamma = gamma
        self.mur_target = mur_target
        self.clt_pair_mode = clt_pair_mode
        self.acc_edge_scope = acc_edge_scope
        self.features = features
        self.leakage_strict = leakage_strict
        self.sigma_fallback = sigma_fallback

    def _feature_list(self) -> list[str]:
        if isinstance(self.features, str):
            if self.features == "all":
                return list(FEATURE_NAMES)
            names = [self.features]
        else:
            names = list(self.features)
        unknown = [n for n in names if n not in FEATURE_NAMES]
        if unknown or not names:
            raise ValueError(f"unknown features {unknown}; choose from {FEATURE_NAMES}")
        return names

    def fit(self, X, y=None):
        if not isinstance(self.log, ActivityLog):
            raise TypeError("TemporalFeatureExtractor needs an ActivityLog as `log`")
        contexts = check_contexts(X)
        self.time_constraints_ = TimeConstraints(_hours(self.tau_sus), _hours(self.tau_fos))
        self.feature_names_ = self._feature_list()
        self.index_ = build_index(self.log)
        if self.sigma is not None:
            sigma = float(self.sigma)
        elif self.leakage_strict and contexts:
            horizon = max(c.time for c in contexts)
            sub = self.log.until(horizon)
            sigma = estimate_sigma(sub, self.sigma_fallback) if len(sub) else float(self.sigma_fallback)
        elif len(self.log):
            sigma = estimate_sigma(self.log, self.sigma_fallback, self.index_)
        else:
            sigma = float(self.sigma_fallback)
        self.sigma_ = sigma
        self.config_ = FeatureConfig(
            sigma=sigma,
            gamma=self.gamma,
            mur_target=self.mur_target,
            clt_pair_mode=self.clt_pair_mode,
            acc_edge_scope=self.acc_edge_scope,
            hub_scope="causal" if self.leakage_strict else "global",
        )
        self.n_features_in_ = 4
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "index_")
        contexts = check_contexts(X)
        out = np.zeros((len(contexts), len(self.feature_names_)), dtype=float)
        for i, ctx in enumerate(contexts):
            out[i] = compute_selected(self.index_, ctx, self.time_constraints_, self.config_, self.feature_names_)
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "feature_names_")
        return np.asarray(self.feature_names_, dtype=object)


def feature_rows(
    index: TemporalIndex, contexts: Iterable[SampleContext], tc: TimeConstraints, config: FeatureConfig
) -> list[FeatureVector]:
    return [compute_all(index, ctx, tc, config) for ctx in contexts]
