"""Time index over an activity log and the two neighbourhood queries.

``neighbors(v, t)`` is the set of users ``v`` retweeted within the last
``tau_sus`` hours.  ``active_neighbors(v, topic, t)`` is the set of users
``v'`` for which some retweet ``v -> v'`` at ``t1`` and some adoption of
``topic`` by ``v'`` at ``t2`` satisfy::

    t1 <= t2,   t2 - t1 <= tau_sus,   t2 <= t,   t - t2 <= tau_fos

All four bounds are inclusive.  Timestamps are integer seconds; window
lengths are given in hours.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Sequence

from .activity_log import ActivityLog

__all__ = [
    "HOUR",
    "TimeConstraints",
    "TemporalIndex",
    "ActiveNeighbor",
    "build_index",
    "neighbors",
    "active_neighbors",
    "earliest_pair",
]

HOUR = 3600


@dataclass(frozen=True)
class TimeConstraints:
    """Susceptible span and forgettable span, in hours.

    ``math.inf`` for both is the constraint-free case.
    """

    tau_sus: float
    tau_fos: float

    def __post_init__(self):
        for name in ("tau_sus", "tau_fos"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value!r}")

    @classmethod
    def unconstrained(cls) -> "TimeConstraints":
        return cls(math.inf, math.inf)

    @property
    def is_unconstrained(self) -> bool:
        return math.isinf(self.tau_sus) and math.isinf(self.tau_fos)

    @property
    def sus_seconds(self) -> float:
        return _to_seconds(self.tau_sus)

    @property
    def fos_seconds(self) -> float:
        return _to_seconds(self.tau_fos)

    def as_tuple(self) -> tuple[float, float]:
        return (self.tau_sus, self.tau_fos)


def _to_seconds(hours: float) -> float:
    if math.isinf(hours):
        return math.inf
    seconds = hours * HOUR
    # whole-second windows compare exactly against integer timestamps
    return int(seconds) if float(seconds).is_integer() else seconds


@dataclass(frozen=True, order=True)
class ActiveNeighbor:
    user: str
    edge_time: int
    adopt_time: int


class TemporalIndex:
    """Read-only, time-sorted lookup tables built from one :class:`ActivityLog`.

    out_edges
        ``adopter -> [(source, time), ...]`` sorted by time.
    adoptions
        ``(user, topic) -> [time, ...]`` sorted.
    """

    def __init__(self, log: ActivityLog):
        self.log = log
        out: dict[str, list[tuple[int, str]]] = defaultdict(list)
        inc: dict[str, list[tuple[int, str]]] = defaultdict(list)
        pair: dict[tuple[str, str], list[int]] = defaultdict(list)
        topic_pair: dict[tuple[str, str, str], list[int]] = defaultdict(list)
        adopt: dict[tuple[str, str], list[int]] = defaultdict(list)
        retweeted: dict[str, list[int]] = defaultdict(list)
        for r in log.records:
            out[r.adopter].append((r.time, r.source))
            inc[r.source].append((r.time, r.adopter))
            pair[(r.adopter, r.source)].append(r.time)
            topic_pair[(r.adopter, r.source, r.topic)].append(r.time)
            adopt[(r.adopter, r.topic)].append(r.time)
            retweeted[r.source].append(r.time)

        self.out_edges: dict[str, list[tuple[str, int]]] = {}
        self._out_times: dict[str, list[int]] = {}
        self._out_sources: dict[str, list[str]] = {}
        for v, events in out.items():
            events.sort()
            self.out_edges[v] = [(s, t) for t, s in events]
            self._out_times[v] = [t for t, _ in events]
            self._out_sources[v] = [s for _, s in events]

        self.in_edges: dict[str, list[tuple[str, int]]] = {}
        self._in_times: dict[str, list[int]] = {}
        self._in_adopters: dict[str, list[str]] = {}
        for s, events in inc.items():
            events.sort()
            self.in_edges[s] = [(a, t) for t, a in events]
            self._in_times[s] = [t for t, _ in events]
            self._in_adopters[s] = [a for _, a in events]

        self.pair_times = {k: sorted(v) for k, v in pair.items()}
        self.topic_pair_times = {k: sorted(v) for k, v in topic_pair.items()}
        self.adoptions = {k: sorted(v) for k, v in adopt.items()}
        self.retweeted_times = {k: sorted(v) for k, v in retweeted.items()}
        self.record_counts = Counter(r.as_tuple() for r in log.records)
        self.topic_adopters: dict[str, set[str]] = defaultdict(set)
        for user, topic in self.adoptions:
            self.topic_adopters[topic].add(user)
        self.topic_adopters = dict(self.topic_adopters)

    def __repr__(self) -> str:
        return f"TemporalIndex({self.log!r})"

    # small counting helpers shared by the feature code

    def has_record(self, adopter: str, source: str, topic: str, time: int) -> bool:
        return self.record_counts.get((adopter, source, topic, time), 0) > 0

    def count_pair_until(self, adopter: str, source: str, t: float) -> int:
        """Retweets ``adopter -> source`` (any topic) with time <= t."""
        return bisect_right(self.pair_times.get((adopter, source), ()), t)

    def count_topic_pair_until(self, adopter: str, source: str, topic: str, t: float) -> int:
        return bisect_right(self.topic_pair_times.get((adopter, source, topic), ()), t)

    def count_retweeted_until(self, user: str, t: float) -> int:
        """Times ``user`` was retweeted by anyone on any topic with time <= t."""
        return bisect_right(self.retweeted_times.get(user, ()), t)

    def has_edge_until(self, adopter: str, source: str, t: float, topic: str | None = None) -> bool:
        if topic is None:
            return self.count_pair_until(adopter, source, t) > 0
        return self.count_topic_pair_until(adopter, source, topic, t) > 0

    def adopted(self, user: str, topic: str) -> bool:
        return (user, topic) in self.adoptions

    def retweeters_until(self, source: str, t: float, since: float = -math.inf) -> set[str]:
        """Users who retweeted ``source`` at a time in ``[since, t]``."""
        times = self._in_times.get(source)
        if not times:
            return set()
        lo = bisect_left(times, since)
        hi = bisect_right(times, t)
        return set(self._in_adopters[source][lo:hi])


def build_index(log: ActivityLog) -> TemporalIndex:
    return TemporalIndex(log)


def earliest_pair(
    edge_times: Sequence[int],
    adopt_times: Sequence[int],
    t: float,
    sus: float,
    fos: float,
) -> tuple[int, int] | None:
    """Earliest ``(t1, t2)`` satisfying the four window inequalities, or None.

    Both inputs must be sorted ascending; ``sus``/``fos`` are in seconds.
    "Earliest" minimises the adoption time first, then the edge time.
    """
    if not edge_times or not adopt_times:
        return None
    start = bisect_left(edge_times, t - fos - sus)
    stop = bisect_right(edge_times, t)
    floor_adopt = t - fos
    for k in range(start, stop):
        t1 = edge_times[k]
        lo = t1 if t1 > floor_adopt else floor_adopt
        hi = t1 + sus
        if hi > t:
            hi = t
        if lo > hi:
            continue
        j = bisect_left(adopt_times, lo)
        if j < len(adopt_times) and adopt_times[j] <= hi:
            # lo is nondecreasing in t1, so the first hit has the smallest t2
            return (t1, adopt_times[j])
    return None


def neighbors(index: TemporalIndex, v: str, t: float, tau_sus: float) -> set[str]:
    """Users ``v`` retweeted at some ``t1`` with ``t1 <= t`` and ``t - t1 <= tau_sus``."""
    times = index._out_times.get(v)
    if not times:
        return set()
    lo = bisect_left(times, t - _to_seconds(tau_sus))
    hi = bisect_right(times, t)
    return set(index._out_sources[v][lo:hi])


def active_neighbors(
    index: TemporalIndex, v: str, topic: str, t: float, tc: TimeConstraints
) -> tuple[ActiveNeighbor, ...]:
    """Active neighbours of ``v`` for ``topic`` at ``t``, sorted by user id.

    Each entry carries the earliest qualifying (edge time, adoption time)
    pair.  The ego itself is never reported, so a sample's own activity
    cannot count as influence on itself.
    """
    times = index._out_times.get(v)
    if not times:
        return ()
    sus, fos = tc.sus_seconds, tc.fos_seconds
    lo = bisect_left(times, t - sus - fos)
    hi = bisect_right(times, t)
    result = []
    for u in set(index._out_sources[v][lo:hi]):
        if u == v:
            continue
        adopt_times = index.adoptions.get((u, topic))
        if not adopt_times:
            continue
        hit = earliest_pair(index.pair_times[(v, u)], adopt_times, t, sus, fos)
        if hit is not None:
            result.append(ActiveNeighbor(u, hit[0], hit[1]))
    result.sort()
    return tuple(result)
