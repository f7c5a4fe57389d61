"""Balanced positive/negative samples.

Every record ``(v, v'', topic, t)`` of an eligible user is a positive.  Its
negative is a user ``v'`` that had ``v`` as an active neighbour for
``topic`` at ``t`` but never adopted ``topic``; the negative sample is
``(v', v, topic, t)``, i.e. same topic and same timestamp.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .activity_log import ActivityLog, FilterSpec, eligible_users
from .features import SampleContext
from .temporal_graph import TemporalIndex, TimeConstraints, active_neighbors, earliest_pair

logger = logging.getLogger(__name__)

__all__ = [
    "Sample",
    "SampleSet",
    "negative_candidates",
    "draw_negative",
    "build_balanced_set",
    "read_samples",
]

POSITIVE, NEGATIVE = 1, 0


@dataclass(frozen=True)
class Sample:
    ego: str
    source: str
    topic: str
    time: int
    label: int
    paired_with: int

    def context(self) -> SampleContext:
        return SampleContext(self.ego, self.source, self.topic, self.time)


@dataclass
class SampleSet:
    """Samples stored pairwise: positive at ``2i``, its negative at ``2i + 1``."""

    samples: list[Sample] = field(default_factory=list)
    seed: int = 0
    filter: FilterSpec | None = None
    tc: TimeConstraints | None = None
    n_skipped: int = 0
    literal: bool = False

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=int)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples], dtype=np.int64)

    def to_contexts(self) -> list[SampleContext]:
        return [s.context() for s in self.samples]

    def positives(self) -> list[Sample]:
        return [s for s in self.samples if s.label == POSITIVE]

    def negatives(self) -> list[Sample]:
        return [s for s in self.samples if s.label == NEGATIVE]

    def metadata(self) -> dict:
        return {
            "seed": self.seed,
            "filter": str(self.filter) if self.filter else None,
            "tau_sus": _json_hours(self.tc.tau_sus) if self.tc else None,
            "tau_fos": _json_hours(self.tc.tau_fos) if self.tc else None,
            "n_skipped": self.n_skipped,
            "literal": self.literal,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.metadata(), sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["ego", "source", "topic", "time", "label", "paired_with"])
        for s in self.samples:
            writer.writerow([s.ego, s.source, s.topic, s.time, s.label, s.paired_with])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"metadata": self.metadata(), "samples": [asdict(s) for s in self.samples]}
        return json.dumps(doc, sort_keys=True, indent=1)


def _json_hours(h):
    return None if math.isinf(h) else h


def _from_metadata(meta: dict, samples: list[Sample]) -> SampleSet:
    sus, fos = meta.get("tau_sus"), meta.get("tau_fos")
    tc = None
    if "tau_sus" in meta:
        tc = TimeConstraints(math.inf if sus is None else sus, math.inf if fos is None else fos)
    return SampleSet(
        samples=samples,
        seed=meta.get("seed", 0),
        filter=FilterSpec.parse(meta["filter"]) if meta.get("filter") else None,
        tc=tc,
        n_skipped=meta.get("n_skipped", 0),
        literal=meta.get("literal", False),
    )


def read_samples(text: str) -> SampleSet:
    """Inverse of :meth:`SampleSet.to_csv` / :meth:`SampleSet.to_json`."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        return _from_metadata(doc["metadata"], [Sample(**s) for s in doc["samples"]])
    lines = text.splitlines()
    meta = json.loads(lines[0][2:]) if lines and lines[0].startswith("# ") else {}
    body = lines[1:] if meta else lines
    rows = list(csv.DictReader(body))
    samples = [
        Sample(r["ego"], r["source"], r["topic"], int(r["time"]), int(r["label"]), int(r["paired_with"]))
        for r in rows
    ]
    return _from_metadata(meta, samples)


def negative_candidates(
    index: TemporalIndex,
    positive: Sample | SampleContext,
    tc: TimeConstraints,
    literal: bool = False,
) -> set[str]:
    """Users influenced by ``positive.ego`` on its topic at its time who never adopted the topic.

    With ``literal=True`` the second condition is instead "never retweeted
    the topic from one of their own active neighbours".
    """
    v, topic, t = positive.ego, positive.topic, positive.time
    adopt_times = index.adoptions.get((v, topic))
    if not adopt_times:
        return set()
    sus, fos = tc.sus_seconds, tc.fos_seconds
    out = set()
    for w in index.retweeters_until(v, t, since=t - sus - fos):
        if w == v:
            continue
        if earliest_pair(index.pair_times[(w, v)], adopt_times, t, sus, fos) is None:
            continue
        if literal:
            act = active_neighbors(index, w, topic, t, tc)
            if any(index.count_topic_pair_until(w, a.user, topic, math.inf) for a in act):
                continue
        elif index.adopted(w, topic):
            continue
        out.add(w)
    return out


def draw_negative(candidates, seed: int, ordinal: int) -> str:
    """Uniform draw from ``candidates`` with a stream fixed by ``(seed, ordinal)``."""
    pool = sorted(candidates)
    rng = np.random.default_rng([seed, ordinal])
    return pool[int(rng.integers(len(pool)))]


def _pair_chunk(index, records, tc, seed, literal):
    out = []
    for ordinal, rec in records:
        ctx = SampleContext(rec.adopter, rec.source, rec.topic, rec.time)
        cands = negative_candidates(index, ctx, tc, literal)
        out.append((rec, draw_negative(cands, seed, ordinal) if cands else None))
    return out


def build_balanced_set(
    index: TemporalIndex,
    log: ActivityLog,
    filter: FilterSpec | None,
    tc: TimeConstraints,
    seed: int,
    *,
    literal: bool = False,
    n_jobs: int = 1,
) -> SampleSet:
    """One positive per record of an eligible ego, each paired with one drawn negative.

    Positives without any negative candidate are dropped (counted in
    ``n_skipped``).  The draw for record ``i`` only depends on ``(seed, i)``,
    so the result does not depend on ``n_jobs``.
    """
    allowed = eligible_users(log, filter)
    todo = [(i, r) for i, r in enumerate(log.records) if r.adopter in allowed]
    if n_jobs == 1 or len(todo) < 2:
        pairs = _pair_chunk(index, todo, tc, seed, literal)
    else:
        n_chunks = max(1, min(len(todo), 4 * abs(n_jobs)))
        bounds = np.linspace(0, len(todo), n_chunks + 1).astype(int)
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_pair_chunk)(index, todo[a:b], tc, seed, literal) for a, b in zip(bounds[:-1], bounds[1:])
        )
        pairs = [p for part in parts for p in part]

    samples: list[Sample] = []
    skipped = 0
    for rec, neg in pairs:
        if neg is None:
            skipped += 1
            continue
        k = len(samples)
        samples.append(Sample(rec.adopter, rec.source, rec.topic, rec.time, POSITIVE, k + 1))
        samples.append(Sample(neg, rec.adopter, rec.topic, rec.time, NEGATIVE, k))
    if skipped:
        logger.debug("dropped %d positives without negative candidates", skipped)
    return SampleSet(samples, seed=seed, filter=filter, tc=tc, n_skipped=skipped, literal=literal)
