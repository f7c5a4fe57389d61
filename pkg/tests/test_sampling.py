import random
from collections import Counter

import pytest

from tempinfluence.activity_log import ActivityLog, FilterSpec
from tempinfluence.features import SampleContext
from tempinfluence.sampling import (
    NEGATIVE,
    POSITIVE,
    build_balanced_set,
    draw_negative,
    negative_candidates,
    read_samples,
)
from tempinfluence.temporal_graph import TimeConstraints, build_index

from conftest import H, LOG_A_ROWS, make_log, random_rows
from oracle import o_negative_candidates

TC = TimeConstraints(24, 8)


@pytest.fixture
def log_s():
    return make_log(LOG_A_ROWS[:5])


def test_candidates_log_s(log_s):
    idx = build_index(log_s)
    assert negative_candidates(idx, SampleContext("B", "C", "#y", 12 * H), TC) == {"A"}


def test_candidates_empty_cases(log_s):
    idx = build_index(log_s)
    # nobody ever retweeted A
    assert negative_candidates(idx, SampleContext("A", "C", "#z", 25 * H), TC) == set()
    # everyone influenced eventually adopts: A adopts #y at 44h in the full log
    full = build_index(make_log(LOG_A_ROWS))
    assert negative_candidates(full, SampleContext("B", "C", "#y", 12 * H), TC) == set()


def test_literal_reading_differs_from_prose():
    # w is influenced by v on #a, never retweeted #a from its active neighbours,
    # but did adopt #a from someone else
    rows = [("w", "v", "#q", 1), ("v", "s", "#a", 2), ("w", "z", "#a", 30)]
    idx = build_index(make_log(rows))
    ctx = SampleContext("v", "s", "#a", 2 * H)
    assert negative_candidates(idx, ctx, TC) == set()
    assert negative_candidates(idx, ctx, TC, literal=True) == {"w"}


def test_candidates_match_oracle():
    rng = random.Random(17)
    for _ in range(6):
        rows = random_rows(rng, n_users=12, n_records=120, n_topics=3)
        idx = build_index(make_log(rows, unit=1))
        for _ in range(15):
            a, b, th, t = rng.choice(rows)
            tc = TimeConstraints(rng.choice([8, 48, 720]), rng.choice([8, 48, 720]))
            for literal in (False, True):
                got = negative_candidates(idx, SampleContext(a, b, th, t), tc, literal)
                assert got == o_negative_candidates(rows, a, th, t, tc.sus_seconds, tc.fos_seconds, literal)


def test_balanced_set_log_s(log_s):
    idx = build_index(log_s)
    for seed in (0, 1, 99):
        ss = build_balanced_set(idx, log_s, None, TC, seed)
        pos = [(s.ego, s.source, s.topic, s.time) for s in ss.positives()]
        neg = [(s.ego, s.source, s.topic, s.time) for s in ss.negatives()]
        # C's #y adoption at 40h also influences A (edge at 20h), giving a second pair
        assert pos == [("B", "C", "#y", 12 * H), ("C", "D", "#y", 40 * H)]
        assert neg == [("A", "B", "#y", 12 * H), ("A", "C", "#y", 40 * H)]
        assert ss.n_skipped == 3


def test_balanced_set_empty_log():
    ss = build_balanced_set(build_index(ActivityLog()), ActivityLog(), None, TC, 3)
    assert len(ss) == 0


def _synthetic_case(seed=4):
    rng = random.Random(seed)
    rows = random_rows(rng, n_users=40, n_records=500, n_topics=8)
    log = make_log(rows, unit=1)
    return log, build_index(log)


def test_balanced_set_contract():
    log, idx = _synthetic_case()
    tc = TimeConstraints(72, 24)
    ss = build_balanced_set(idx, log, None, tc, seed=5)
    assert len(ss) > 0
    assert len(ss.positives()) == len(ss.negatives())
    for i in range(0, len(ss), 2):
        p, n = ss.samples[i], ss.samples[i + 1]
        assert p.label == POSITIVE and n.label == NEGATIVE
        assert p.paired_with == i + 1 and n.paired_with == i
        assert (p.topic, p.time) == (n.topic, n.time)
        assert n.source == p.ego
        assert n.ego in negative_candidates(idx, p.context(), tc)
        assert idx.has_record(p.ego, p.source, p.topic, p.time)


def test_filter_restricts_positives():
    log, idx = _synthetic_case()
    ss = build_balanced_set(idx, log, FilterSpec("R", 15), TimeConstraints(720, 720), seed=1)
    heavy = {u for u, c in Counter(r.adopter for r in log).items() if c >= 15}
    assert {s.ego for s in ss.positives()} <= heavy


def test_determinism_and_worker_independence():
    log, idx = _synthetic_case()
    tc = TimeConstraints(168, 48)
    a = build_balanced_set(idx, log, None, tc, seed=8)
    b = build_balanced_set(idx, log, None, tc, seed=8)
    c = build_balanced_set(idx, log, None, tc, seed=8, n_jobs=2)
    assert a.to_csv() == b.to_csv() == c.to_csv()
    assert a.to_json() == c.to_json()


def test_uniform_draws_over_four_candidates():
    cands = {"w1", "w2", "w3", "w4"}
    counts = Counter(draw_negative(cands, seed=123, ordinal=i) for i in range(10_000))
    for c in cands:
        assert abs(counts[c] / 10_000 - 0.25) <= 0.05


def test_persistence_round_trip():
    log, idx = _synthetic_case()
    ss = build_balanced_set(idx, log, FilterSpec("H", 2), TimeConstraints(720, 8), seed=2)
    for text in (ss.to_csv(), ss.to_json()):
        back = read_samples(text)
        assert back.samples == ss.samples
        assert back.seed == 2 and back.tc == ss.tc and back.filter == ss.filter
    assert ss.to_csv().startswith("# {")
