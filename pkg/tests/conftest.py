import random

import pytest

from tempinfluence.activity_log import ActivityLog, ActivityRecord
from tempinfluence.temporal_graph import build_index

H = 3600

# (adopter, source, topic, hour)
LOG_A_ROWS = [
    ("A", "B", "#x", 10),
    ("B", "C", "#y", 12),
    ("A", "C", "#x", 20),
    ("A", "C", "#z", 25),
    ("C", "D", "#y", 40),
    ("A", "C", "#y", 44),
]


def make_log(rows, unit=H):
    return ActivityLog(ActivityRecord(a, b, th, t * unit) for (a, b, th, t) in rows)


def random_rows(rng: random.Random, n_users=None, n_records=None, n_topics=None, span_hours=720):
    n_users = n_users or rng.randint(2, 50)
    n_records = n_records if n_records is not None else rng.randint(1, 500)
    n_topics = n_topics or rng.randint(1, 6)
    users = [f"u{i}" for i in range(n_users)]
    topics = [f"#t{i}" for i in range(n_topics)]
    # coarse time grid so boundary equalities actually occur
    step = rng.choice([1, 4, 12])
    rows = []
    for _ in range(n_records):
        a, b = rng.choice(users), rng.choice(users)
        rows.append((a, b, rng.choice(topics), rng.randrange(0, span_hours + 1, step) * H))
    return rows


@pytest.fixture
def log_a():
    return make_log(LOG_A_ROWS)


@pytest.fixture
def index_a(log_a):
    return build_index(log_a)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
