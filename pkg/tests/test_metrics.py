import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from district_dsm import metrics
from district_dsm.data import month_blocks
from oracles import adp_oracle, lf_oracle, peak_oracle, ramping_oracle, sum_oracle


def test_ramping_examples():
    assert metrics.ramping([5, 5, 5, 5]) == 0
    assert metrics.ramping([1, 3, 2]) == 3
    assert metrics.ramping([0, 10, 0, 10]) == 30
    with pytest.raises(metrics.TooShort):
        metrics.ramping([1.0])


def test_load_factor_examples():
    assert metrics.one_minus_load_factor(np.full(48, 7.0), [(0, 48)]) == 0
    assert metrics.one_minus_load_factor([2, 4], [(0, 2)]) == pytest.approx(0.25)
    assert metrics.one_minus_load_factor([2, 4, 1, 1], [(0, 2), (2, 4)]) == pytest.approx(0.125)
    with pytest.raises(metrics.ZeroPeakMonth):
        metrics.one_minus_load_factor([0, 0, 1, 1], [(0, 2), (2, 4)])


def test_daily_peak_examples():
    assert metrics.avg_daily_peak(np.full(72, 3.5)) == 3.5
    two_days = np.concatenate([np.r_[np.zeros(23), 10.0], np.r_[20.0, np.zeros(23)]])
    assert metrics.avg_daily_peak(two_days) == 15
    day = np.random.default_rng(0).random(24)
    assert metrics.avg_daily_peak(day) == metrics.peak_demand(day)
    with pytest.raises(metrics.NotDayAligned):
        metrics.avg_daily_peak(np.ones(25))


def test_peak_and_net_examples():
    assert metrics.peak_demand([5, 5, 5]) == 5
    assert metrics.peak_demand([0, 10, 3]) == 10
    assert metrics.net_consumption([1, 2, 3]) == 6
    assert metrics.net_consumption(np.zeros(24)) == 0
    x = np.random.default_rng(3).random(8760) * 300
    assert metrics.peak_demand(x) == peak_oracle(list(x))
    assert metrics.net_consumption(x) == pytest.approx(sum_oracle(list(x)), rel=1e-9)
    for f in (metrics.peak_demand, metrics.net_consumption):
        with pytest.raises(metrics.Empty):
            f([])


def test_score_self_normalization():
    x = np.random.default_rng(1).random(24 * 60) + 0.1
    r = metrics.score(x, x, month_blocks(len(x)))
    assert r.ratio_values == [1.0] * 5
    assert r.avg_score == 1.0


def test_score_half_scaled():
    rng = np.random.default_rng(2)
    base = rng.random(24 * 60) * 50 + 5
    r = metrics.score(0.5 * base, base, month_blocks(len(base)))
    ratios = dict(zip(metrics.COMPONENTS, r.ratio_values))
    for k in ("ramping", "avg_daily_peak", "peak_demand", "net_consumption"):
        assert ratios[k] == pytest.approx(0.5, rel=1e-12)
    assert ratios["one_minus_load_factor"] == pytest.approx(1.0, rel=1e-12)
    assert r.avg_score == pytest.approx(0.6, rel=1e-12)


def test_zero_baseline_component_warns_and_reports_one():
    flat = np.full(48, 4.0)
    agent = flat + np.r_[0.0, 1.0, np.zeros(46)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = metrics.score(agent, flat, [(0, 48)])
    assert r.ratios["ramping"] == 1.0
    assert r.ratios["one_minus_load_factor"] == 1.0
    assert set(r.zero_baseline) == {"ramping", "one_minus_load_factor"}
    assert any(issubclass(w.category, metrics.ZeroBaselineComponent) for w in caught)


def test_score_table_format(tmp_path):
    ratios = dict(zip(metrics.COMPONENTS, [0.735, 0.881, 0.849, 0.986, 1.014]))
    avg = sum(ratios.values()) / 5
    report = metrics.CostReport(**{k: 1.0 for k in metrics.COMPONENTS}, ratios=ratios, avg_score=avg)
    path = tmp_path / "table.csv"
    metrics.write_score_table(path, [("1", report)])
    rows = metrics.read_score_table(path)
    assert list(rows[0]) == metrics.TABLE_HEADER
    assert rows[0]["ramping"] == "0.735"
    assert rows[-1]["climate_zone"] == "Avg. Score"
    assert float(rows[0]["avg_score"]) == pytest.approx(0.893, abs=5e-4)


@settings(max_examples=60, deadline=None)
@given(
    days=st.integers(1, 70),
    scale=st.floats(0.01, 1e3),
    seed=st.integers(0, 2**31 - 1),
)
def test_scale_equivariance(days, scale, seed):
    x = np.random.default_rng(seed).random(24 * days) + 0.05
    blocks = month_blocks(len(x))
    a = metrics.components(x, blocks)
    b = metrics.components(scale * x, blocks)
    for k in ("avg_daily_peak", "peak_demand", "net_consumption"):
        assert b[k] == pytest.approx(scale * a[k], rel=1e-9)
    assert b["ramping"] == pytest.approx(scale * a["ramping"], rel=1e-9, abs=1e-12)
    assert b["one_minus_load_factor"] == pytest.approx(a["one_minus_load_factor"], rel=1e-9, abs=1e-12)


def test_metrics_match_oracles_small_sample():
    rng = np.random.default_rng(11)
    for _ in range(25):
        days = int(rng.integers(1, 40))
        x = rng.random(24 * days) * 100
        blocks = month_blocks(len(x))
        xs = list(x)
        assert metrics.ramping(x) == pytest.approx(ramping_oracle(xs), rel=1e-9)
        assert metrics.one_minus_load_factor(x, blocks) == pytest.approx(lf_oracle(xs, blocks), rel=1e-9)
        assert metrics.avg_daily_peak(x) == pytest.approx(adp_oracle(xs), rel=1e-9)
        assert metrics.peak_demand(x) == peak_oracle(xs)
        assert metrics.net_consumption(x) == pytest.approx(sum_oracle(xs), rel=1e-9)
