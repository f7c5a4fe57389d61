"""Activity logs: the retweet records everything else is computed from.

A record ``(adopter, source, topic, time)`` says that ``adopter`` retweeted
``source`` on ``topic`` at ``time`` (integer seconds since epoch).  Each
record is both an adoption event for the adopter and a directed edge
``adopter -> source`` in the retweet graph.
"""

from __future__ import annotations

import io
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

__all__ = [
    "ActivityRecord",
    "ActivityLog",
    "FilterSpec",
    "DatasetStats",
    "LogParseError",
    "CANONICAL_COLUMNS",
    "parse_log",
    "read_log",
    "dump_log",
    "write_log",
    "eligible_users",
    "compute_stats",
]

CANONICAL_COLUMNS = ("adopter", "source", "topic", "time")


class LogParseError(ValueError):
    """A malformed line in an activity log."""

    def __init__(self, line_number: int, reason: str, line: str = ""):
        self.line_number = line_number
        self.reason = reason
        self.line = line
        super().__init__(f"line {line_number}: {reason}")


@dataclass(frozen=True, slots=True)
class ActivityRecord:
    adopter: str
    source: str
    topic: str
    time: int

    def __post_init__(self):
        if self.time < 0:
            raise ValueError(f"negative timestamp {self.time}")

    @property
    def is_self_retweet(self) -> bool:
        return self.adopter == self.source

    def as_tuple(self) -> tuple[str, str, str, int]:
        return (self.adopter, self.source, self.topic, self.time)


class ActivityLog:
    """Immutable sequence of records plus the derived user/topic/time sets.

    Records keep their input order; duplicates are kept because identical
    tuples are distinct retweet events.
    """

    __slots__ = ("records", "users", "topics", "time_span", "n_skipped")

    def __init__(self, records: Iterable[ActivityRecord] = (), n_skipped: int = 0):
        self.records: tuple[ActivityRecord, ...] = tuple(records)
        users: set[str] = set()
        topics: set[str] = set()
        for r in self.records:
            users.add(r.adopter)
            users.add(r.source)
            topics.add(r.topic)
        self.users = frozenset(users)
        self.topics = frozenset(topics)
        if self.records:
            times = [r.time for r in self.records]
            self.time_span: tuple[int, int] | None = (min(times), max(times))
        else:
            self.time_span = None
        self.n_skipped = n_skipped

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ActivityRecord]:
        return iter(self.records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActivityLog):
            return NotImplemented
        return self.records == other.records

    def __hash__(self) -> int:
        return hash(self.records)

    def __repr__(self) -> str:
        return (
            f"ActivityLog({len(self.records)} records, {len(self.users)} users, "
            f"{len(self.topics)} topics)"
        )

    @property
    def self_retweet_count(self) -> int:
        return sum(1 for r in self.records if r.is_self_retweet)

    @property
    def duration_hours(self) -> float:
        if self.time_span is None:
            return 0.0
        return (self.time_span[1] - self.time_span[0]) / 3600.0

    def until(self, time: int) -> "ActivityLog":
        """Sub-log of records with ``record.time <= time``."""
        return ActivityLog(r for r in self.records if r.time <= time)


@dataclass(frozen=True)
class FilterSpec:
    """User activity filter: ``R`` counts retweets, ``H`` counts distinct hashtags."""

    kind: str
    threshold: int

    def __post_init__(self):
        if self.kind not in ("R", "H"):
            raise ValueError(f"filter kind must be 'R' or 'H', got {self.kind!r}")
        if int(self.threshold) != self.threshold or self.threshold < 1:
            raise ValueError(f"filter threshold must be a positive integer, got {self.threshold!r}")

    @classmethod
    def parse(cls, text: str) -> "FilterSpec":
        """``"R60"`` -> ``FilterSpec("R", 60)``."""
        text = text.strip()
        if len(text) < 2 or not text[1:].isdigit():
            raise ValueError(f"cannot parse filter {text!r}; expected e.g. R60 or H40")
        return cls(text[0].upper(), int(text[1:]))

    def __str__(self) -> str:
        return f"{self.kind}{self.threshold}"


@dataclass
class DatasetStats:
    retweet_count: int
    user_count: int
    hashtag_count: int
    activity_histogram: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "retweet_count": self.retweet_count,
            "user_count": self.user_count,
            "hashtag_count": self.hashtag_count,
            "activity_histogram": {str(k): v for k, v in sorted(self.activity_histogram.items())},
        }


def _parse_fields(fields: Sequence[str], columns: Sequence[str], lineno: int, line: str) -> ActivityRecord:
    if len(fields) != len(columns):
        raise LogParseError(lineno, f"expected {len(columns)} fields, got {len(fields)}", line)
    row = dict(zip(columns, fields))
    for name in ("adopter", "source", "topic"):
        if not row[name]:
            raise LogParseError(lineno, f"empty {name}", line)
    try:
        time = int(row["time"])
    except (TypeError, ValueError):
        raise LogParseError(lineno, f"timestamp {row['time']!r} is not an integer", line) from None
    if time < 0:
        raise LogParseError(lineno, f"negative timestamp {time}", line)
    return ActivityRecord(str(row["adopter"]), str(row["source"]), str(row["topic"]), time)


def _parse_json_line(line: str, lineno: int) -> ActivityRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LogParseError(lineno, f"invalid JSON: {exc.msg}", line) from None
    if not isinstance(obj, dict):
        raise LogParseError(lineno, "JSON line is not an object", line)
    missing = [c for c in CANONICAL_COLUMNS if c not in obj]
    if missing:
        raise LogParseError(lineno, f"missing keys {missing}", line)
    if isinstance(obj["time"], bool) or not isinstance(obj["time"], (int, str)):
        raise LogParseError(lineno, f"timestamp {obj['time']!r} is not an integer", line)
    fields = [str(obj["adopter"]), str(obj["source"]), str(obj["topic"]), str(obj["time"])]
    return _parse_fields(fields, CANONICAL_COLUMNS, lineno, line)


def _text_lines(stream) -> Iterator[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for raw in stream:
        if isinstance(raw, (bytes, bytearray)):
            raw = raw.decode("utf-8")
        yield raw


def parse_log(
    stream: IO | bytes | str,
    fmt: str = "tsv",
    *,
    skip_malformed: bool = False,
    columns: Sequence[str] = CANONICAL_COLUMNS,
    delimiter: str = "\t",
) -> ActivityLog:
    """Parse a delimiter-separated (``fmt="tsv"``) or JSON-lines (``fmt="jsonl"``) log.

    ``columns`` maps the file's column order onto the record fields, for
    files whose native order differs from the canonical one.  Blank lines
    are ignored.  With ``skip_malformed`` bad lines are counted in
    ``ActivityLog.n_skipped`` instead of raising :class:`LogParseError`.
    """
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown log format {fmt!r}")
    if sorted(columns) != sorted(CANONICAL_COLUMNS):
        raise ValueError(f"columns must be a permutation of {CANONICAL_COLUMNS}, got {tuple(columns)}")
    records = []
    skipped = 0
    for lineno, raw in enumerate(_text_lines(stream), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        try:
            if fmt == "tsv":
                rec = _parse_fields(line.split(delimiter), columns, lineno, line)
            else:
                rec = _parse_json_line(line, lineno)
        except LogParseError:
            if not skip_malformed:
                raise
            skipped += 1
            continue
        records.append(rec)
    return ActivityLog(records, n_skipped=skipped)


def read_log(path: str | os.PathLike, fmt: str | None = None, **kwargs) -> ActivityLog:
    """Read a log file; the format defaults from the extension (``.jsonl``/``.json`` -> JSON lines)."""
    if fmt is None:
        fmt = "jsonl" if str(path).endswith((".jsonl", ".json")) else "tsv"
    with open(path, "rb") as fh:
        return parse_log(fh, fmt, **kwargs)


def dump_log(log: ActivityLog | Iterable[ActivityRecord], fmt: str = "tsv") -> str:
    lines = []
    for r in log:
        if fmt == "tsv":
            for value in (r.adopter, r.source, r.topic):
                if "\t" in value or "\n" in value:
                    raise ValueError(f"field {value!r} cannot be written to the tab-separated format")
            lines.append(f"{r.adopter}\t{r.source}\t{r.topic}\t{r.time}\n")
        elif fmt == "jsonl":
            lines.append(json.dumps(dict(zip(CANONICAL_COLUMNS, r.as_tuple())), ensure_ascii=False) + "\n")
        else:
            raise ValueError(f"unknown log format {fmt!r}")
    return "".join(lines)


def write_log(log: ActivityLog, path: str | os.PathLike, fmt: str = "tsv") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dump_log(log, fmt))


def adopter_counts(log: ActivityLog) -> Counter:
    return Counter(r.adopter for r in log.records)


def eligible_users(log: ActivityLog, filt: FilterSpec | None) -> set[str]:
    """Users passing ``filt``; ``None`` means no filter (every user in the log)."""
    if filt is None:
        return set(log.users)
    if filt.kind == "R":
        counts = adopter_counts(log)
    else:
        topics_by_user: dict[str, set[str]] = {}
        for r in log.records:
            topics_by_user.setdefault(r.adopter, set()).add(r.topic)
        counts = {u: len(ts) for u, ts in topics_by_user.items()}
    return {u for u, c in counts.items() if c >= filt.threshold}


def compute_stats(log: ActivityLog) -> DatasetStats:
    """Counts and the adopter-side activity histogram ``{k: users with k retweets}``.

    Users that only ever appear as a retweet source have k = 0 and are left
    out of the histogram.
    """
    per_user = adopter_counts(log)
    histogram = Counter(per_user.values())
    return DatasetStats(
        retweet_count=len(log.records),
        user_count=len(log.users),
        hashtag_count=len(log.topics),
        activity_histogram=dict(sorted(histogram.items())),
    )
