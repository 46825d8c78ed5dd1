import numpy as np
import pytest

from lro import LikelihoodSet, ObservationSet, worst_case_expectation
from lro.apps import BallSupport, BoxSupport, PortfolioInstance, backtest, portfolio_lro, synthetic_returns
from lro.apps.portfolio import (
    default_box,
    read_returns_csv,
    single_stock_weights,
    worker_count,
    write_returns_csv,
)
from lro.oracle import simplex_x_grid


def test_single_asset():
    r = np.array([[0.01], [0.03], [-0.02]])
    inst = PortfolioInstance(r, gamma=-5.0)
    res = portfolio_lro(inst)
    assert res.decision.tolist() == [1.0]
    o = ObservationSet(r[:, 0], [1, 1, 1])
    ref = worst_case_expectation(LikelihoodSet(o, -5.0), r[:, 0]).value
    assert res.value == pytest.approx(ref, abs=1e-9)


def test_dominant_asset_with_box():
    r = np.array([[0.03, 0.01], [0.02, -0.01], [0.05, 0.04]])
    inst = PortfolioInstance(r, default_box(r), gamma=-10.0)
    res = portfolio_lro(inst)
    assert res.decision[0] == pytest.approx(1.0, abs=1e-6)


def test_saddle_point_observed_only():
    inst = PortfolioInstance(np.array([[1.0, 0.0], [0.0, 1.0]]), gamma=-1e6)
    res = portfolio_lro(inst)
    assert res.value == pytest.approx(0.5, abs=1e-3)
    assert res.decision == pytest.approx([0.5, 0.5], abs=1e-3)


def test_wide_box_interior_split_certified_by_grid():
    r = np.array([[1.0, 0.0], [0.0, 1.0]])
    box = BoxSupport(np.array([-0.1, -0.1]), np.array([2.0, 2.0]))
    inst = PortfolioInstance(r, box, gamma=2 * np.log(0.5) - 1.0)
    res = portfolio_lro(inst)
    assert res.decision == pytest.approx([0.5, 0.5], abs=1e-3)
    # brute force over x: worst case of the observed rows plus the box corner
    o = ObservationSet(np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]), [1, 1, 0])
    s = LikelihoodSet(o, inst.gamma)
    best = max(worst_case_expectation(s, np.array([x[0], x[1], box.lo @ x])).value for x in simplex_x_grid(2, 1e-3))
    assert res.value >= best - 1e-6


def test_ball_support():
    rng = np.random.default_rng(1)
    r = rng.normal(0.001, 0.02, (20, 3))
    c = r.mean(axis=0)
    rad = float(np.max(np.linalg.norm(r - c, axis=1))) * 1.2
    inst = PortfolioInstance(r, BallSupport(c, rad))
    res = portfolio_lro(inst)
    x = res.decision
    assert np.all(x >= -1e-12) and x.sum() == pytest.approx(1.0)
    # the value never exceeds the empirical mean, nor falls below the ball's cheapest return
    assert res.value <= r.mean(axis=0) @ x + 1e-12
    assert res.value >= c @ x - rad * np.linalg.norm(x) - 1e-9


def test_ball_worst_case_is_lower_than_observed_only():
    rng = np.random.default_rng(2)
    r = rng.normal(0.001, 0.02, (15, 2))
    c = r.mean(axis=0)
    rad = float(np.max(np.linalg.norm(r - c, axis=1))) * 2
    a = portfolio_lro(PortfolioInstance(r, BallSupport(c, rad), gamma=-60.0))
    b = portfolio_lro(PortfolioInstance(r, None, gamma=-60.0))
    assert a.value <= b.value + 1e-9


def test_support_must_contain_rows():
    r = np.array([[0.0, 0.1], [0.2, 0.0]])
    with pytest.raises(ValueError):
        PortfolioInstance(r, BoxSupport(np.zeros(2), np.full(2, 0.15)))
    with pytest.raises(ValueError):
        PortfolioInstance(r, BallSupport(np.zeros(2), 0.05))
    with pytest.raises(TypeError):
        PortfolioInstance(r, "box")


def test_csv_round_trip_and_errors():
    names, r = synthetic_returns(10, seed=3)
    n2, r2 = read_returns_csv(write_returns_csv(names, r))
    assert n2 == names and np.array_equal(r, r2)
    for bad in ("", "A,B\n", "A,B\n1,2,3\n", "A,B\n1,x\n", "A,\n1,2\n"):
        with pytest.raises(ValueError):
            read_returns_csv(bad)


def test_single_stock_rule():
    w = np.array([[0.01, 0.02], [0.01, 0.00], [0.01, 0.01]])
    assert single_stock_weights(w).tolist() == [1.0, 0.0]  # tie goes to the lower index


def test_worker_count(monkeypatch):
    monkeypatch.setenv("LRO_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("LRO_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("LRO_THREADS", "-1")
    with pytest.raises(ValueError):
        worker_count()


def test_backtest_constant_returns():
    r = np.full((40, 3), 0.001)
    res = backtest(r, window=30, threads=1)
    cums = [rep.cumulative_return for rep in res.reports]
    assert cums[0] == pytest.approx(cums[1]) and cums[1] == pytest.approx(cums[2])


def test_backtest_dominance():
    rng = np.random.default_rng(0)
    base = rng.normal(0.0, 0.01, (45, 1))
    r = np.hstack([base + 0.01, base])
    res = backtest(r, window=30, threads=1)
    assert np.allclose(res.weights["LRO"][:, 0], 1.0, atol=1e-6)
    assert np.all(res.weights["SS"][:, 0] == 1.0)


@pytest.fixture(scope="module")
def synthetic_backtest():
    _, r = synthetic_returns(200, seed=7)
    return backtest(r, window=30, threads=2)


def test_backtest_report_consistency(synthetic_backtest):
    res = synthetic_backtest
    days = 170
    for rep in res.reports:
        assert sum(rep.diversification_histogram.values()) == days
        assert set(rep.diversification_histogram) == {"1", "2", "3", "4"}
    w = res.weights["LRO"]
    assert np.all(w >= -1e-12) and np.allclose(w.sum(axis=1), 1.0)
    by = {rep.strategy: rep for rep in res.reports}
    assert by["EQ"].diversification_histogram["4"] == days
    assert by["LRO"].wins_vs["SS"] + by["SS"].wins_vs["LRO"] <= days
    assert by["LRO"].std_daily <= by["SS"].std_daily


def test_backtest_thread_count_does_not_change_result(synthetic_backtest):
    _, r = synthetic_returns(200, seed=7)
    single = backtest(r, window=30, threads=1)
    assert np.array_equal(single.weights["LRO"], synthetic_backtest.weights["LRO"])


def test_backtest_input_checks():
    with pytest.raises(ValueError):
        backtest(np.zeros((30, 2)), window=30)
    with pytest.raises(ValueError):
        backtest(np.zeros((30, 2)), window=1)
