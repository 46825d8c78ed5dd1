"""Outer maximisation of the worst-case value ``g(x)``.

``g(x) = min_{p in D} sum_i p_i h(x, xi_i)`` is concave whenever ``h`` is
concave in ``x`` (a pointwise minimum of concave functions), so a scalar
golden-section search and projected supergradient ascent on the simplex both
apply. Every evaluation of ``g`` is a full inner solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import DecisionProblem, Interval, IntervalEmpty, LikelihoodSet, Simplex, WorstCaseSolution
from .inner import worst_case_expectation

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OuterResult:
    decision: object
    value: float
    inner: Optional[WorstCaseSolution]
    iterations: int
    gap: float = 0.0


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(y) + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def _golden_max(g: Callable[[float], float], lo: float, hi: float, xtol: float):
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    it = 0
    while b - a > xtol:
        it += 1
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - INV_PHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + INV_PHI * (b - a)
            gd = g(d)
    return (c, gc, it) if gc >= gd else (d, gd, it)


def maximize_concave_scalar(g: Callable[[float], float], interval: Interval, rel_tol: float = 1e-4, flat_tol: float = 1e-9):
    """Maximise a concave ``g`` over an interval; return ``(x, g(x), evaluations)``.

    Flat optima are resolved to the midpoint of the optimal set; on integer
    intervals that is the lower of the two middle integers.
    """
    cache = {}

    def G(x):
        x = float(x)
        if x not in cache:
            cache[x] = g(x)
        return cache[x]

    lo, hi = float(interval.lo), float(interval.hi)
    if interval.integer:
        lo, hi = math.ceil(lo), math.floor(hi)
        if lo > hi:
            raise IntervalEmpty("interval contains no integer")
    width = hi - lo
    if width == 0:
        return lo, G(lo), 1
    x_hat, g_hat, _ = _golden_max(G, lo, hi, max(rel_tol * width, 1e-12))
    for x in (lo, hi):
        if G(x) > g_hat:
            x_hat, g_hat = x, G(x)

    if interval.integer:
        cands = [k for k in range(int(math.floor(x_hat)) - 1, int(math.ceil(x_hat)) + 2) if lo <= k <= hi]
        k = max(cands, key=lambda c: (G(c), -c))
        g_star = G(k)
        thresh = g_star - flat_tol * (1.0 + abs(g_star))
        left = right = k
        while left - 1 >= lo and G(left - 1) >= thresh:
            left -= 1
        while right + 1 <= hi and G(right + 1) >= thresh:
            right += 1
        x_star = (left + right) // 2
        return int(x_star), G(x_star), len(cache)

    g_star = g_hat
    thresh = g_star - flat_tol * (1.0 + abs(g_star))
    xtol = rel_tol * width

    def edge(inside, outside):
        # bisect for the boundary of {g >= thresh} between an inside and an outside point
        if G(outside) >= thresh:
            return outside
        while abs(outside - inside) > xtol:
            mid = 0.5 * (inside + outside)
            if G(mid) >= thresh:
                inside = mid
            else:
                outside = mid
        return inside

    left = edge(x_hat, lo)
    right = edge(x_hat, hi)
    x_star = 0.5 * (left + right)
    if G(x_star) < thresh:
        x_star = x_hat
    return x_star, G(x_star), len(cache)


def optimize_scalar(problem: DecisionProblem, lset: LikelihoodSet, rel_tol: float = 1e-4) -> OuterResult:
    """Maximise the worst-case value over an interval of scalar decisions."""
    fs = problem.feasible_set
    if not isinstance(fs, Interval):
        raise TypeError("optimize_scalar needs an Interval feasible set")
    support = lset.observations.support
    solves = {}

    def g(x):
        sol = worst_case_expectation(lset, problem.payoff(x, support))
        solves[x] = sol
        return sol.value

    x, val, evals = maximize_concave_scalar(g, fs, rel_tol=rel_tol)
    inner = solves.get(float(x))
    if inner is None:
        inner = worst_case_expectation(lset, problem.payoff(x, support))
    return OuterResult(decision=x, value=inner.value, inner=inner, iterations=evals)


def optimize_simplex(
    problem: DecisionProblem,
    lset: LikelihoodSet,
    max_iter: int = 5000,
    gap_tol: float = 1e-7,
    x0: Optional[np.ndarray] = None,
) -> OuterResult:
    """Projected supergradient ascent of ``g`` over the unit simplex.

    At ``x`` the worst case ``p*`` gives the supergradient ``sum_i p*_i grad_x h(x, xi_i)``.
    Steps are ``s0 / sqrt(k)`` with ``s0 = 1 / max_i ||grad_x h(x0, xi_i)||``.
    Because ``p*`` is feasible for the inner problem, concavity of ``h`` in x gives
    the upper bound ``g(x) + max_j G_j - G.x`` on the optimum; the loop stops
    once the best bound is within ``gap_tol * (1 + |g|)`` of the best value.
    """
    fs = problem.feasible_set
    if not isinstance(fs, Simplex):
        raise TypeError("optimize_simplex needs a Simplex feasible set")
    if problem.supergradient is None:
        raise ValueError("optimize_simplex needs the problem's supergradient")
    support = lset.observations.support
    d = fs.dim
    x = np.full(d, 1.0 / d) if x0 is None else project_simplex(x0)

    def evaluate(x):
        sol = worst_case_expectation(lset, problem.payoff(x, support))
        grads = np.asarray(problem.supergradient(x, support), dtype=float)
        return sol, grads

    sol, grads = evaluate(x)
    norm = float(np.max(np.linalg.norm(grads, axis=1)))
    s0 = 1.0 / norm if norm > 0 else 1.0
    best_x, best_val, best_sol = x.copy(), sol.value, sol
    best_ub = math.inf
    k = 0
    for k in range(1, max_iter + 1):
        G = sol.distribution @ grads
        best_ub = min(best_ub, sol.value + float(G.max() - G @ x))
        if sol.value > best_val:
            best_x, best_val, best_sol = x.copy(), sol.value, sol
        if best_ub - best_val <= gap_tol * (1.0 + abs(best_val)):
            break
        x = project_simplex(x + (s0 / math.sqrt(k)) * G)
        sol, grads = evaluate(x)
    else:
        if sol.value > best_val:
            best_x, best_val, best_sol = x.copy(), sol.value, sol
    return OuterResult(decision=best_x, value=best_val, inner=best_sol, iterations=k, gap=max(best_ub - best_val, 0.0))
