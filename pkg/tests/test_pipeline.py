import math

import pytest

from tempinfluence.learning import DegenerateDataError
from tempinfluence.pipeline import ComparisonRow, compare_constraints, format_table, make_classifier, train_eval
from tempinfluence.synthgen import GenParams, generate
from tempinfluence.temporal_graph import TimeConstraints

from conftest import LOG_A_ROWS, make_log


@pytest.fixture(scope="module")
def small_log():
    return generate(GenParams(n_users=80, n_topics=5), 3)


def test_train_eval_runs_every_feature(small_log):
    res = train_eval(small_log, TimeConstraints(168, 24), classifier_params={"n_estimators": 5})
    assert set(res) == {"nan", "pne", "cdi", "prr", "clt", "clc", "hub", "mur", "acc", "acr", "all"}
    for r in res.values():
        m = r.metrics
        assert m.tp + m.fp + m.tn + m.fn == r.n_test
        assert 0.0 <= m.f1 <= 1.0


def test_720_equals_unconstrained_on_short_log(small_log):
    sets = {"all": ["nan", "prr", "cdi", "acc"]}
    a = train_eval(small_log, TimeConstraints(720, 720), sets, classifier="logistic", classifier_params={"epochs": 100})
    b = train_eval(small_log, TimeConstraints.unconstrained(), sets, classifier="logistic", classifier_params={"epochs": 100})
    assert a["all"].metrics == b["all"].metrics


def test_deterministic_and_worker_independent(small_log):
    kw = dict(classifier_params={"n_estimators": 6}, seed=4)
    a = train_eval(small_log, TimeConstraints(72, 24), {"x": ["nan", "hub"]}, **kw)
    b = train_eval(small_log, TimeConstraints(72, 24), {"x": ["nan", "hub"]}, n_jobs=2, **kw)
    assert a["x"].metrics == b["x"].metrics


def test_degenerate_inputs():
    with pytest.raises(DegenerateDataError):
        train_eval(make_log(LOG_A_ROWS[:1]), TimeConstraints(24, 8))
    with pytest.raises(ValueError):
        make_classifier("svm")


def test_comparison_table(small_log):
    rows, _, _ = compare_constraints(small_log, TimeConstraints(168, 24), {"nan": ["nan"]}, classifier_params={"n_estimators": 5})
    assert rows[0].feature == "nan" and rows[0].tau_sus == 168
    text = format_table(rows)
    assert "(168,24)" in text.splitlines()[2]
    zero = ComparisonRow("x", 8, 8, 0.5, 0.0)
    assert math.isnan(zero.improvement_pct) and "n/a" in format_table([zero])
    assert ComparisonRow("x", 8, 8, 0.6, 0.5).improvement_pct == pytest.approx(20.0)
