import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempinfluence.activity_log import (
    ActivityLog,
    ActivityRecord,
    FilterSpec,
    LogParseError,
    compute_stats,
    dump_log,
    eligible_users,
    parse_log,
    read_log,
)

from conftest import LOG_A_ROWS, H

LOG_A_TSV = "".join(f"{a}\t{b}\t{th}\t{t * H}\n" for a, b, th, t in LOG_A_ROWS)


def test_empty_stream():
    log = parse_log(io.BytesIO(b""))
    assert len(log) == 0
    assert log.users == frozenset() and log.topics == frozenset()
    assert log.time_span is None


def test_log_a_read_back():
    log = parse_log(io.BytesIO(LOG_A_TSV.encode()))
    assert len(log) == 6
    assert log.users == {"A", "B", "C", "D"}
    assert log.topics == {"#x", "#y", "#z"}
    assert log.time_span == (10 * H, 44 * H)
    assert log.records[0] == ActivityRecord("A", "B", "#x", 10 * H)


def test_file_order_kept_and_duplicates_retained():
    text = "A\tB\t#x\t50\nA\tB\t#x\t50\nC\tD\t#y\t10\n"
    log = parse_log(text)
    assert [r.time for r in log] == [50, 50, 10]


@pytest.mark.parametrize(
    "line, reason",
    [
        ("A\tB\t#x", "expected 4 fields"),
        ("A\tB\t#x\tnoon", "not an integer"),
        ("A\tB\t#x\t-5", "negative"),
        ("\tB\t#x\t5", "empty adopter"),
    ],
)
def test_malformed_line_fails_fast_with_line_number(line, reason):
    text = "A\tB\t#x\t1\n" + line + "\n"
    with pytest.raises(LogParseError) as err:
        parse_log(text)
    assert err.value.line_number == 2
    assert reason in str(err.value)


def test_skip_malformed_counts():
    text = "A\tB\t#x\t1\nbroken\nC\tD\t#y\tx\nE\tF\t#z\t3\n"
    log = parse_log(text, skip_malformed=True)
    assert len(log) == 2
    assert log.n_skipped == 2


def test_jsonl_variant_and_column_adapter():
    lines = [json.dumps({"adopter": a, "source": b, "topic": th, "time": t * H}) for a, b, th, t in LOG_A_ROWS]
    log = parse_log("\n".join(lines), fmt="jsonl")
    assert log == parse_log(LOG_A_TSV)

    swapped = "".join(f"{t * H},{th},{b},{a}\n" for a, b, th, t in LOG_A_ROWS)
    log2 = parse_log(swapped, columns=("time", "topic", "source", "adopter"), delimiter=",")
    assert log2 == log


def test_read_log_by_extension(tmp_path):
    p = tmp_path / "log.tsv"
    p.write_text(LOG_A_TSV)
    assert len(read_log(p)) == 6


def test_self_retweet_is_kept_and_flagged():
    log = parse_log("A\tA\t#x\t5\nA\tB\t#x\t6\n")
    assert len(log) == 2
    assert log.self_retweet_count == 1


def test_filter_spec_validation():
    assert FilterSpec.parse("R60") == FilterSpec("R", 60)
    assert str(FilterSpec("H", 40)) == "H40"
    with pytest.raises(ValueError):
        FilterSpec("R", 0)
    with pytest.raises(ValueError):
        FilterSpec("X", 3)


def test_eligible_users_boundary():
    rows = [ActivityRecord("u59", "s", f"#t{i % 3}", i) for i in range(59)]
    rows += [ActivityRecord("u60", "s", "#t", i) for i in range(60)]
    log = ActivityLog(rows)
    got = eligible_users(log, FilterSpec("R", 60))
    assert "u60" in got and "u59" not in got
    assert eligible_users(log, FilterSpec("H", 3)) == {"u59"}


def test_eligible_users_log_a(log_a):
    assert eligible_users(log_a, FilterSpec("R", 3)) == {"A"}
    assert eligible_users(log_a, FilterSpec("R", 1)) == {"A", "B", "C"}
    assert eligible_users(log_a, FilterSpec("H", 3)) == {"A"}


def test_stats_empty_and_log_a(log_a):
    empty = compute_stats(ActivityLog())
    assert (empty.retweet_count, empty.user_count, empty.hashtag_count) == (0, 0, 0)
    assert empty.activity_histogram == {}

    stats = compute_stats(log_a)
    assert (stats.retweet_count, stats.user_count, stats.hashtag_count) == (6, 4, 3)
    assert stats.activity_histogram == {1: 2, 4: 1}
    assert stats.to_dict()["activity_histogram"] == {"1": 2, "4": 1}


names = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), min_size=1, max_size=6)
records = st.builds(ActivityRecord, names, names, names, st.integers(min_value=0, max_value=2**40))


@settings(max_examples=100, deadline=None)
@given(st.lists(records, max_size=30))
def test_round_trip(recs):
    log = ActivityLog(recs)
    for fmt in ("tsv", "jsonl"):
        back = parse_log(dump_log(log, fmt).encode("utf-8"), fmt)
        assert back.records == log.records
    assert compute_stats(back).retweet_count == len(recs)


@settings(max_examples=100, deadline=None)
@given(st.lists(records, max_size=30), st.integers(1, 5), st.integers(1, 5), st.sampled_from("RH"))
def test_eligible_users_monotone(recs, a, b, kind):
    log = ActivityLog(recs)
    lo, hi = sorted((a, b))
    assert eligible_users(log, FilterSpec(kind, hi)) <= eligible_users(log, FilterSpec(kind, lo))
    assert eligible_users(log, FilterSpec("R", 1)) == {r.adopter for r in recs}
