import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempinfluence.analysis import (
    GainGrid,
    SweepConfig,
    UndefinedCorrelationError,
    cell_curve,
    evaluate_cell,
    pearson,
    probability_curve,
    sweep_grid,
)
from tempinfluence.features import FeatureConfig
from tempinfluence.synthgen import GenParams, generate
from tempinfluence.temporal_graph import TimeConstraints, build_index

from conftest import make_log, random_rows


def test_pearson_exact_lines():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-15)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0, abs=1e-15)


def test_pearson_closed_form_regression():
    # sxy = 1, sxx = 42/9, syy = 2  ->  r = 3 / sqrt(84)
    assert pearson([1, 2, 4], [1, 3, 2]) == pytest.approx(0.32732683535398854, abs=1e-15)
    assert pearson([1, 2, 4], [1, 3, 2]) == pytest.approx(3 / math.sqrt(84), abs=1e-15)


def test_pearson_undefined():
    with pytest.raises(UndefinedCorrelationError):
        pearson([1], [2])
    with pytest.raises(UndefinedCorrelationError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(finite, finite), min_size=3, max_size=30),
    st.floats(0.01, 100),
    st.floats(-100, 100),
)
def test_pearson_symmetry_affine_bounds(pairs, a, b):
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    try:
        r = pearson(xs, ys)
    except UndefinedCorrelationError:
        return
    assert -1.0 <= r <= 1.0
    assert abs(pearson(ys, xs) - r) <= 1e-12
    xt = [a * x + b for x in xs]
    if np.ptp(xt) > 1e-6 * max(1.0, np.abs(xt).max()):
        assert abs(pearson(xt, ys) - r) <= 1e-9


def test_pearson_affine_invariance_tight():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.integers(-20, 20, size=12).astype(float)
        y = rng.integers(-20, 20, size=12).astype(float)
        r = pearson(x, y)
        assert abs(pearson(2.0 * x + 4.0, y) - r) <= 1e-12
        assert abs(pearson(x, 0.5 * y - 3.0) - r) <= 1e-12
        assert abs(pearson(y, x) - r) <= 1e-12


def test_curve_basic_groups():
    c = probability_curve([1, 1, 0, 0], [1, 1, 1, 1], min_support=1)
    assert [(p.value, p.probability, p.support) for p in c.points] == [(1.0, 0.5, 4)]
    c = probability_curve([1] * 7, [3] * 7)
    assert [(p.value, p.probability, p.support) for p in c.points] == [(3.0, 1.0, 7)]


def test_curve_min_support_and_empty():
    labels = [1, 0, 1, 0, 1, 1, 0]
    values = [1, 1, 1, 1, 1, 2, 2]
    c = probability_curve(labels, values, "exact", min_support=5)
    assert [p.value for p in c.points] == [1.0]
    assert len(probability_curve([], [])) == 0
    with pytest.raises(ValueError):
        probability_curve([1, 0], [1.0])


def test_curve_width_bins():
    values = np.linspace(0, 1, 40)
    labels = (values > 0.5).astype(int)
    c = probability_curve(labels, values, "width", n_bins=4, min_support=1)
    assert len(c) == 4
    assert c.values.tolist() == pytest.approx([0.125, 0.375, 0.625, 0.875])
    assert c.probabilities.tolist() == [0.0, 0.0, 1.0, 1.0]
    assert all(0 <= p <= 1 for p in c.probabilities)


@pytest.fixture(scope="module")
def planted7():
    log = generate(GenParams(), 7)
    return log, build_index(log)


def test_nan_curve_monotone_on_planted_log(planted7):
    log, idx = planted7
    curve = cell_curve(idx, log, "nan", None, 7, TimeConstraints(720, 720))
    first = curve.points[:5]
    assert len(first) == 5
    probs = [p.probability for p in first]
    assert all(a <= b for a, b in zip(probs, probs[1:]))
    # regression fixture: (value, positives, support)
    got = [(p.value, round(p.probability * p.support), p.support) for p in first]
    assert got == [(1.0, 426, 1994), (2.0, 282, 693), (3.0, 245, 409), (4.0, 181, 261), (5.0, 208, 229)]


def _small_case(seed=11):
    rng = random.Random(seed)
    log = make_log(random_rows(rng, n_users=30, n_records=400, n_topics=4), unit=1)
    return log, build_index(log)


def test_baseline_cell_gain_exactly_zero_and_consistent():
    log, idx = _small_case()
    cfg = SweepConfig(tau_values=(24, 168, 720), min_support=2)
    g = sweep_grid(idx, log, "nan", None, 3, cfg)
    assert g.gain[2, 2] == 0.0
    assert g.rho_base == g.rho[2, 2]
    ok = ~np.isnan(g.rho)
    expected = (g.rho - g.rho_base) / abs(g.rho_base)
    assert np.array_equal(g.gain[ok], expected[ok])


def test_single_cell_grid_equals_unconstrained():
    log, idx = _small_case()
    cfg = SweepConfig(tau_values=(720,), min_support=2)
    g = sweep_grid(idx, log, "nan", None, 3, cfg)
    assert g.rho.shape == (1, 1)
    rho, _ = evaluate_cell(idx, log, "nan", None, 3, TimeConstraints(720, 720), cfg)
    assert g.rho[0, 0] == rho
    assert g.gain[0, 0] == 0.0


def test_off_grid_baseline_evaluated():
    log, idx = _small_case()
    cfg = SweepConfig(tau_values=(24, 168), min_support=2)
    g = sweep_grid(idx, log, "nan", None, 3, cfg)
    rho, _ = evaluate_cell(idx, log, "nan", None, 3, TimeConstraints(720, 720), cfg)
    assert g.rho_base == rho


def test_sweep_deterministic_and_order_independent():
    log, idx = _small_case()
    cfg = SweepConfig(tau_values=(24, 168, 720), min_support=2)
    a = sweep_grid(idx, log, "prr", None, 5, cfg)
    b = sweep_grid(idx, log, "prr", None, 5, cfg)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    # evaluating cells one at a time, in reverse, gives the same rho values
    for ts in reversed(cfg.tau_values):
        for tf in reversed(cfg.tau_values):
            rho, _ = evaluate_cell(idx, log, "prr", None, 5, TimeConstraints(ts, tf), cfg)
            i, j = cfg.tau_values.index(ts), cfg.tau_values.index(tf)
            assert (math.isnan(rho) and math.isnan(a.rho[i, j])) or rho == a.rho[i, j]
    c = sweep_grid(idx, log, "prr", None, 5, SweepConfig(tau_values=(24, 168, 720), min_support=2, n_jobs=2))
    assert c.to_csv() == a.to_csv()


def test_missing_cells_and_zero_baseline():
    # a log where no sample can exist: every correlation is undefined
    log = make_log([("a", "b", "#x", 1)])
    g = sweep_grid(build_index(log), log, "nan", None, 0, SweepConfig(tau_values=(24, 720)))
    assert np.isnan(g.rho).all() and np.isnan(g.gain).all()
    assert g.rho_base is None
    lines = g.to_csv().splitlines()
    assert lines[0] == "tau_sus,tau_fos,rho,gain,missing"
    assert len(lines) == 5 and all(l.endswith(",,1") for l in lines[1:])


def test_gain_grid_exports():
    g = GainGrid([8, 720], np.array([[0.5, np.nan], [0.4, 0.8]]), np.array([[-0.375, np.nan], [-0.5, 0.0]]), 0.8)
    rows = g.to_csv().splitlines()
    assert rows[1] == "8,8,0.5,-0.375,0"
    assert rows[2] == "8,720,,,1"
    d = g.to_dict()
    assert d["rho"][0][1] is None and d["gain"][1][1] == 0.0
    assert g.cell(720, 8) == (0.4, -0.5)


def test_cdi_sweep_estimates_sigma():
    log, idx = _small_case()
    g = sweep_grid(idx, log, "cdi", None, 1, SweepConfig(tau_values=(720,), min_support=2))
    assert g.rho.shape == (1, 1)
    with pytest.raises(ValueError):
        sweep_grid(idx, log, "bogus")


def test_sample_level_option():
    log, idx = _small_case()
    cfg = SweepConfig(tau_values=(720,), correlation="sample", feature_config=FeatureConfig())
    rho, n = evaluate_cell(idx, log, "nan", None, 2, TimeConstraints(720, 720), cfg)
    assert n > 0 and -1 <= rho <= 1
    with pytest.raises(ValueError):
        SweepConfig(correlation="kendall")
