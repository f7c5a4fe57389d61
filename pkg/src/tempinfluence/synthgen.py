"""Seeded synthetic retweet logs with planted time-constrained influence.

Each user gets a power-law number of activities at uniform random times.
Users act in global time order.  At each activity a user either adopts a
new topic or repeats one already adopted.  Every not-yet-adopted topic
carries a hazard of ``base_rate``, multiplied by ``adoption_boost`` when
the user has at least one active neighbour for that topic under the
planted windows; a new adoption happens with probability
``1 - exp(-total hazard)`` and picks the topic in proportion to its
hazard.  Influenced activities retweet one of the active neighbours,
everything else retweets a random followee, which is how the retweet
graph (and thus future influence) grows.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import asdict, dataclass

import numpy as np

from .activity_log import ActivityLog, ActivityRecord
from .temporal_graph import HOUR, earliest_pair

__all__ = ["GenParams", "generate", "powerlaw_counts", "loglog_slope"]


@dataclass(frozen=True)
class GenParams:
    n_users: int = 500
    n_topics: int = 20
    span_hours: float = 720
    activity_exponent: float = 1.8
    planted_tau_sus: float = 168
    planted_tau_fos: float = 24
    adoption_boost: float = 8.0
    base_rate: float = 0.02
    max_activity: int = 300
    n_followees: int = 20

    def __post_init__(self):
        for name in ("n_users", "n_topics", "max_activity", "n_followees"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.activity_exponent > 1:
            raise ValueError("activity_exponent must be > 1")
        if not self.span_hours > 0 or not self.planted_tau_sus > 0 or not self.planted_tau_fos > 0:
            raise ValueError("span and planted windows must be positive")
        if not self.adoption_boost >= 1:
            raise ValueError("adoption_boost must be >= 1")
        if not 0 < self.base_rate < 1:
            raise ValueError("base_rate must be in (0, 1)")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GenParams":
        return cls(**d)


def powerlaw_counts(rng: np.random.Generator, n: int, exponent: float, k_max: int) -> np.ndarray:
    """``n`` draws from ``p_k ~ k**-exponent`` on ``1..k_max``."""
    k = np.arange(1, k_max + 1)
    p = k.astype(float) ** -exponent
    p /= p.sum()
    return rng.choice(k, size=n, p=p)


def loglog_slope(histogram: dict[int, int], min_count: int = 5) -> float:
    """Least-squares slope of log(count) against log(k) over ``k`` with at least ``min_count`` users."""
    pts = [(k, c) for k, c in histogram.items() if k > 0 and c >= min_count]
    if len(pts) < 2:
        raise ValueError("not enough histogram points for a slope")
    x = np.log([k for k, _ in pts])
    y = np.log([c for _, c in pts])
    return float(np.polyfit(x, y, 1)[0])


def generate(params: GenParams = GenParams(), seed: int = 0) -> ActivityLog:
    rng = np.random.default_rng(seed)
    n, m = params.n_users, params.n_topics
    width = len(str(n - 1))
    users = [f"u{i:0{width}d}" for i in range(n)]
    topics = [f"#t{j:0{len(str(m - 1))}d}" for j in range(m)]
    span = int(round(params.span_hours * HOUR))
    sus = params.planted_tau_sus * HOUR
    fos = params.planted_tau_fos * HOUR

    counts = powerlaw_counts(rng, n, params.activity_exponent, params.max_activity)

    # followees drawn in proportion to activity so busy users get retweeted more
    weights = counts.astype(float)
    followees = []
    for u in range(n):
        w = weights.copy()
        w[u] = 0.0
        k = min(params.n_followees, n - 1)
        if k == 0:
            followees.append(np.array([u]))
            continue
        followees.append(np.sort(rng.choice(n, size=k, replace=False, p=w / w.sum())))

    events = []
    for u in range(n):
        for t in rng.integers(0, span + 1, size=counts[u]):
            events.append((int(t), u))
    events.sort()

    edge_times: dict[tuple[int, int], list[int]] = {}
    neighbours_of: list[list[int]] = [[] for _ in range(n)]
    adoption_times: dict[tuple[int, int], list[int]] = {}
    topics_of: list[list[int]] = [[] for _ in range(n)]
    adopted = [set() for _ in range(n)]
    recent: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (time, topic) per user

    records = []
    for t, u in events:
        influencers: dict[int, list[int]] = {}
        for s in neighbours_of[u]:
            hist = recent[s]
            lo = bisect_left(hist, (t - fos, -1))
            seen = set()
            for _, th in hist[lo:]:
                if th in seen or th in adopted[u]:
                    continue
                seen.add(th)
                if earliest_pair(edge_times[(u, s)], adoption_times[(s, th)], t, sus, fos) is not None:
                    influencers.setdefault(th, []).append(s)

        fresh = [th for th in range(m) if th not in adopted[u]]
        if fresh:
            hazard = np.array(
                [params.base_rate * (params.adoption_boost if th in influencers else 1.0) for th in fresh]
            )
            total = float(hazard.sum())
            adopt_new = not topics_of[u] or rng.random() < 1.0 - math.exp(-total)
        else:
            adopt_new = False
        if adopt_new:
            topic = fresh[int(rng.choice(len(fresh), p=hazard / total))]
        else:
            topic = topics_of[u][int(rng.integers(len(topics_of[u])))]

        if topic in influencers:
            pool = sorted(influencers[topic])
            source = pool[int(rng.integers(len(pool)))]
        else:
            fl = followees[u]
            source = int(fl[int(rng.integers(len(fl)))])

        records.append(ActivityRecord(users[u], users[source], topics[topic], t))
        key = (u, source)
        if key not in edge_times:
            edge_times[key] = []
            neighbours_of[u].append(source)
        edge_times[key].append(t)
        adoption_times.setdefault((u, topic), []).append(t)
        if topic not in adopted[u]:
            adopted[u].add(topic)
            topics_of[u].append(topic)
        recent[u].append((t, topic))

    return ActivityLog(records)
