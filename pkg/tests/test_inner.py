import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from lro import (
    EmptySet,
    LikelihoodSet,
    ObservationSet,
    SideConstraints,
    log_likelihood,
    max_log_likelihood,
    moment_constraints,
    worst_case_expectation,
    worst_case_expectation_constrained,
)
from lro.oracle import simplex_grid_min

CHI2_2_95 = 5.991464547107979  # -2 ln 0.05


def make(counts, gamma=None, drop=None, support=None, sc=None):
    o = ObservationSet(np.arange(len(counts), dtype=float) if support is None else support, counts)
    if gamma is None:
        gamma = max_log_likelihood(o) - drop
    return LikelihoodSet(o, gamma, sc)


def test_gamma_at_maximum_returns_mle():
    s = make([1, 1], gamma=2 * math.log(0.5))
    sol = worst_case_expectation(s, [0.0, 1.0])
    assert sol.value == pytest.approx(0.5, abs=1e-12)
    assert sol.distribution == pytest.approx([0.5, 0.5])


def test_loose_gamma_collapses_to_minimum():
    sol = worst_case_expectation(make([1, 1], gamma=-1e6), [0.0, 1.0])
    assert sol.value <= 1e-4


def test_three_point_fixture_against_recorded_grid_value():
    # grid oracle at step 1e-3, recorded before the solver existed: 1.104 at p = (0.932, 0.05, 0.018)
    s = make([2, 1, 1], drop=CHI2_2_95 / 2)
    sol = worst_case_expectation(s, [1.0, 2.0, 4.0])
    assert abs(sol.value - 1.104) <= 2e-3
    assert sol.value <= 1.104 + 1e-12  # the grid only sees feasible points


def test_constant_payoff_short_circuit():
    sol = worst_case_expectation(make([3, 1, 0], drop=1.0), [2.5, 2.5, 2.5])
    assert sol.value == 2.5 and sol.lambda_ == 0.0 and sol.mu == 2.5
    assert sol.distribution == pytest.approx([0.75, 0.25, 0.0])


def test_empty_set_raises():
    with pytest.raises(EmptySet):
        worst_case_expectation(make([1, 1], drop=-0.5), [0.0, 1.0])


def test_payoff_length_mismatch():
    with pytest.raises(ValueError):
        worst_case_expectation(make([1, 1], drop=1.0), [0.0, 1.0, 2.0])


def test_zero_count_point_receives_mass_when_cheapest():
    # the unobserved point has the lowest payoff; a loose set moves mass onto it
    s = make([5, 5, 0], drop=3.0)
    sol = worst_case_expectation(s, [1.0, 2.0, -1.0])
    assert sol.distribution[2] > 0.01
    assert sol.mu == pytest.approx(-1.0)
    assert log_likelihood(s.observations, sol.distribution) == pytest.approx(s.gamma, abs=1e-6)
    grid = simplex_grid_min([5, 5, 0], s.gamma, [1.0, 2.0, -1.0], step=1e-3)
    assert abs(sol.value - grid.value) <= 2e-3


def test_zero_count_point_ignored_when_not_cheapest():
    s = make([5, 5, 0], drop=3.0)
    sol = worst_case_expectation(s, [1.0, 2.0, 3.0])
    assert sol.distribution[2] == 0.0


payoffs = st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=6)


@given(st.lists(st.integers(0, 20), min_size=2, max_size=6), payoffs, st.floats(0.01, 30.0))
def test_solution_certificates(counts, h, drop):
    n = min(len(counts), len(h))
    counts, h = counts[:n], np.array(h[:n])
    assume(sum(counts) > 0)
    s = make(counts, drop=drop)
    sol = worst_case_expectation(s, h)
    p = sol.distribution
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-8
    assert log_likelihood(s.observations, p) >= s.gamma - 1e-6
    assert sol.value == pytest.approx(float(p @ h), abs=1e-9 * (1 + np.abs(h).max()))
    assert abs(sol.dual_value - sol.value) <= 1e-6 * (1 + abs(sol.value))
    # bounds: between the support minimum and the empirical mean
    assert h.min() - 1e-9 <= sol.value <= s.observations.mle() @ h + 1e-9
    obs_mask = np.array(counts) > 0
    # the constraint is slack only when every observed point already minimises h
    if np.ptp(h) > 1e-9 and np.any(h[obs_mask] > h.min()):
        assert log_likelihood(s.observations, p) == pytest.approx(s.gamma, abs=1e-5)
        slack = sol.dual_slack
        assert np.max(np.abs(slack - (h - sol.mu))) <= 1e-12 * (1 + np.abs(h).max() + abs(sol.mu))
        assert np.all(slack >= 0)
        implied = sol.lambda_ * np.array(counts)[obs_mask] / slack[obs_mask]
        assert np.max(np.abs(implied - p[obs_mask])) <= 1e-6


@given(st.lists(st.integers(1, 10), min_size=2, max_size=5), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_monotone_in_gamma(counts, d1, d2):
    h = np.linspace(-1.0, 2.0, len(counts)) ** 2
    lo, hi = sorted((d1, d2))
    v_big = worst_case_expectation(make(counts, drop=hi), h).value
    v_small = worst_case_expectation(make(counts, drop=lo), h).value
    assert v_big <= v_small + 1e-9


@given(st.floats(-100, 100), st.floats(0.01, 100))
def test_translation_and_scaling(c, scale):
    s = make([4, 2, 1, 3], drop=2.0)
    h = np.array([0.3, -1.0, 2.0, 0.7])
    base = worst_case_expectation(s, h)
    shifted = worst_case_expectation(s, h + c)
    scaled = worst_case_expectation(s, scale * h)
    assert shifted.value == pytest.approx(base.value + c, abs=1e-8 * (1 + abs(c)))
    assert scaled.value == pytest.approx(scale * base.value, rel=1e-8, abs=1e-10)
    assert scaled.distribution == pytest.approx(base.distribution, abs=1e-8)


# -- constrained --------------------------------------------------------------


def test_mean_pinned_linear_payoff_equals_sample_mean():
    support = np.array([1.0, 2.0, 3.0])
    s = make([2, 1, 1], drop=1.0, support=support, sc=moment_constraints(support, 1.75))
    sol = worst_case_expectation(s, support)
    assert sol.value == pytest.approx(1.75, abs=1e-12)


def test_mean_and_second_moment_on_three_points_against_filtered_grid():
    # two moments plus normalisation pin p = (0.3, 0.4, 0.3), which lies on the grid
    support = np.array([0.0, 1.0, 2.0])
    counts = [3, 4, 3]
    o = ObservationSet(support, counts)
    gamma = max_log_likelihood(o) - 3.0
    sc = moment_constraints(support, 1.0, 1.6)
    h = np.array([2.0, -1.0, 0.5])
    sol = worst_case_expectation(LikelihoodSet(o, gamma, sc), h)
    grid = simplex_grid_min(counts, gamma, h, step=1e-3, A_eq=sc.A_eq, b_eq=sc.b_eq, eq_tol=1e-9)
    assert abs(sol.value - grid.value) <= 2e-3
    assert sc.residual(sol.distribution) <= 1e-6


@pytest.mark.parametrize("second", [None, 3.0])
def test_four_point_moment_constraints_against_filtered_grid(second):
    # moments are multiples of the grid step, so exactly feasible grid points exist
    support = np.array([0.0, 1.0, 2.0, 3.0])
    counts = [2, 3, 3, 2]
    o = ObservationSet(support, counts)
    gamma = max_log_likelihood(o) - 2.5
    sc = moment_constraints(support, 1.5, second)
    h = np.array([1.0, -0.5, 0.2, 2.0])
    sol = worst_case_expectation(LikelihoodSet(o, gamma, sc), h)
    grid = simplex_grid_min(counts, gamma, h, step=1e-3, A_eq=sc.A_eq, b_eq=sc.b_eq, eq_tol=1e-9)
    assert sol.value <= grid.value + 1e-7
    assert grid.value - sol.value <= 2e-3


def test_moment_outside_hull_is_empty():
    support = np.array([1.0, 2.0, 3.0])
    s = make([1, 1, 1], drop=1.0, support=support, sc=moment_constraints(support, 4.0))
    with pytest.raises(EmptySet):
        worst_case_expectation(s, [0.0, 1.0, 0.0])


def test_jointly_infeasible_likelihood_and_moments():
    # the mean can reach 2.9 on the simplex, but not while keeping high likelihood of the data
    support = np.array([1.0, 2.0, 3.0])
    s = make([10, 10, 10], drop=0.5, support=support, sc=moment_constraints(support, 2.9))
    with pytest.raises(EmptySet):
        worst_case_expectation(s, [0.0, 1.0, 0.0])


def test_inactive_inequality_matches_unconstrained():
    s0 = make([3, 2, 2], drop=2.0)
    h = np.array([1.0, 3.0, -0.5])
    sc = SideConstraints(A_ge=[[1.0, 0.0, 0.0]], b_ge=[0.0])
    a = worst_case_expectation(s0, h)
    b = worst_case_expectation(LikelihoodSet(s0.observations, s0.gamma, sc), h)
    assert b.value == pytest.approx(a.value, abs=1e-7)


def test_active_inequality_against_grid():
    counts = [3, 2, 2]
    o = ObservationSet([0.0, 1.0, 2.0], counts)
    gamma = max_log_likelihood(o) - 2.0
    h = np.array([1.0, 3.0, -0.5])
    sc = SideConstraints(A_ge=[[0.0, 0.0, -1.0]], b_ge=[-0.2])  # p_3 <= 0.2
    sol = worst_case_expectation(LikelihoodSet(o, gamma, sc), h)
    grid = simplex_grid_min(counts, gamma, h, step=1e-3, A_ge=sc.A_ge, b_ge=sc.b_ge)
    assert abs(sol.value - grid.value) <= 2e-3 * 3.5
    assert sol.distribution[2] <= 0.2 + 1e-6


def test_constrained_routes_to_plain_solver_without_side_constraints():
    s = make([2, 1], drop=1.0)
    a = worst_case_expectation_constrained(s, [0.0, 1.0])
    b = worst_case_expectation(s, [0.0, 1.0])
    assert a.value == b.value


def test_constrained_zero_count_points_get_mass():
    support = np.arange(6, dtype=float)
    counts = [0, 3, 5, 5, 3, 0]
    o = ObservationSet(support, counts)
    mu = 2.5
    s = LikelihoodSet(o, max_log_likelihood(o) - 4.0, moment_constraints(support, mu))
    h = -np.abs(support - 2.5) * 2.0  # worst case pushes mass to the tails
    sol = worst_case_expectation(s, h)
    assert sol.distribution[0] + sol.distribution[5] > 1e-3
    assert abs(sol.distribution @ support - mu) <= 1e-6
    assert abs(sol.dual_value - sol.value) <= 1e-6 * (1 + abs(sol.value))


def test_deterministic():
    s = make([4, 1, 2, 6], drop=3.0)
    h = np.array([0.1, 0.9, -0.4, 0.3])
    a, b = worst_case_expectation(s, h), worst_case_expectation(s, h)
    assert a.value == b.value and np.array_equal(a.distribution, b.distribution)


def test_constrained_likelihood_slack_at_lp_vertex():
    # the moment-matching segment ends at the MLE, which is also the cheapest point for this h:
    # the likelihood constraint is slack and the multiplier vanishes
    from scipy.optimize import linprog as scipy_linprog

    o = ObservationSet([1.0, 2.0, 3.0, 4.0], [0, 3, 1, 2])
    p_hat = o.mle()
    m1 = float(p_hat @ o.support)
    m2 = float(p_hat @ o.support**2)
    sc = moment_constraints(o.support, m1, m2)
    h = -np.abs(o.support - 3.0)
    sol = worst_case_expectation(LikelihoodSet(o, max_log_likelihood(o) - 3.9, sc), h)
    ref = scipy_linprog(h, A_eq=np.vstack([np.ones(4), o.support, o.support**2]), b_eq=[1.0, m1, m2], method="highs")
    assert sol.value == pytest.approx(ref.fun, abs=1e-9)
    assert sol.lambda_ == 0.0
    assert sol.distribution == pytest.approx(p_hat, abs=1e-9)
    assert np.all(sol.dual_slack >= -1e-12)
    assert sol.dual_value == pytest.approx(sol.value, abs=1e-9)
