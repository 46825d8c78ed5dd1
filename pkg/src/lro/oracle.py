"""Brute-force reference computations used by the test-suite.

Nothing here imports the production solvers; every routine is a direct
enumeration or quadrature, exponentially slower than the real thing.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate


class NoFeasibleGridPoint(Exception):
    pass


@dataclass
class GridSpec:
    step: float
    dimension: int
    eq_tol: float = 0.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        K = round(1.0 / self.step)
        if abs(K * self.step - 1.0) > 1e-9:
            raise ValueError("grid step must divide 1")
        self.K = K
        self.size = math.comb(K + self.dimension - 1, self.dimension - 1)


@dataclass
class GridResult:
    value: float
    argmin: np.ndarray
    n_points: int
    n_feasible: int


def _simplex_chunks(n: int, K: int):
    """Yield lists of n integer columns covering all compositions of K into n parts."""
    if n == 1:
        yield [np.array([K])]
        return
    if n == 2:
        i = np.arange(K + 1)
        yield [i, K - i]
        return
    if n == 3:
        i, j = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
        keep = i + j <= K
        i, j = i[keep], j[keep]
        yield [i, j, K - i - j]
        return
    if n == 4:
        # pairs (j, k) ordered by j + k so each slice is a prefix
        j, k = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
        keep = j + k <= K
        j, k = j[keep], k[keep]
        order = np.argsort(j + k, kind="stable")
        j, k = j[order], k[order]
        for i in range(K + 1):
            rest = K - i
            m = (rest + 1) * (rest + 2) // 2
            jj, kk = j[:m], k[:m]
            yield [np.full(m, i), jj, kk, rest - jj - kk]
        return
    raise ValueError("grid enumeration supports at most 4 support points")


def simplex_grid_min(counts, gamma, h, step=1e-3, A_eq=None, b_eq=None, A_ge=None, b_ge=None, eq_tol=None) -> GridResult:
    """Minimum of ``p . h`` over simplex grid points inside the likelihood set.

    Equality rows are accepted within ``eq_tol`` (default: one grid step times
    the largest row entry) since exact equality rarely holds on a grid.
    """
    counts = np.asarray(counts, dtype=float)
    h = np.asarray(h, dtype=float)
    n = len(counts)
    spec = GridSpec(step, n)
    K = spec.K
    if eq_tol is None and A_eq is not None:
        eq_tol = step * float(np.max(np.abs(A_eq)))
    grid = np.arange(K + 1) / K
    with np.errstate(divide="ignore"):
        log_grid = np.log(grid)
    # per-coordinate lookup tables: N_i log p and h_i p at every grid level
    ll_tab = [c * log_grid if c > 0 else np.zeros(K + 1) for c in counts]
    h_tab = [hi * grid for hi in h]
    best, arg, n_feas = math.inf, None, 0
    for chunk in _simplex_chunks(n, K):
        ll = sum(ll_tab[i][chunk[i]] for i in range(n))
        ok = ll >= gamma
        if A_eq is not None or A_ge is not None:
            p = np.stack(chunk, axis=1) / K
            if A_eq is not None:
                ok &= np.all(np.abs(p @ np.asarray(A_eq, float).T - np.asarray(b_eq, float)) <= eq_tol, axis=1)
            if A_ge is not None:
                ok &= np.all(p @ np.asarray(A_ge, float).T >= np.asarray(b_ge, float) - 1e-12, axis=1)
        if not ok.any():
            continue
        n_feas += int(ok.sum())
        sub = [c[ok] for c in chunk]
        vals = sum(h_tab[i][sub[i]] for i in range(n))
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, arg = float(vals[k]), np.array([c[k] for c in sub]) / K
    if arg is None:
        raise NoFeasibleGridPoint("feasible region is thinner than the grid; refine the step")
    return GridResult(best, arg, spec.size, n_feas)


def staircase_cdf_min(points, lower, upper, h: Callable[[np.ndarray], np.ndarray], support, prob_step=0.05, xi_points=2001) -> float:
    """Minimum of ``E_F[h]`` over staircase CDFs on a probability grid within the band.

    The mass of the knot interval ``(X_{k-1}, X_k]`` is placed at the grid
    value of ``xi`` in that interval (both ends included) where ``h`` is
    smallest. ``support`` truncates the two unbounded end intervals.
    """
    points = np.asarray(points, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = len(points)
    if n > 4:
        raise ValueError("staircase enumeration supports at most 4 knots")
    knots = np.concatenate([[support[0]], points, [support[1]]])
    interval_min = []
    for k in range(n + 1):
        xs = np.linspace(knots[k], knots[k + 1], xi_points)
        interval_min.append(float(np.min(h(xs))))
    interval_min = np.array(interval_min)
    K = round(1.0 / prob_step)
    levels = np.arange(K + 1) / K
    best = math.inf
    for F in itertools.product(levels, repeat=n):
        F = np.array(F)
        if np.any(np.diff(F) < 0):
            continue
        if np.any(F < lower - 1e-12) or np.any(F > upper + 1e-12):
            continue
        q = np.diff(np.concatenate([[0.0], F, [1.0]]))
        best = min(best, float(q @ interval_min))
    return best


def chi2_cdf_quadrature(x: float, dof: int) -> float:
    """Chi-square CDF by numerical integration of the density."""
    if x <= 0:
        return 0.0
    k = dof / 2.0
    log_norm = k * math.log(2.0) + math.lgamma(k)
    if dof == 1:
        # substitute t = u^2 to remove the 1/sqrt(t) singularity
        f = lambda u: 2.0 * math.exp(-u * u / 2.0 - log_norm)
        val, _ = integrate.quad(f, 0.0, math.sqrt(x), epsabs=1e-14, epsrel=1e-13)
        return val
    f = lambda t: math.exp((k - 1.0) * math.log(t) - t / 2.0 - log_norm) if t > 0 else (0.5 if dof == 2 else 0.0)
    val, _ = integrate.quad(f, 0.0, x, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def chi2_quantile_quadrature(q: float, dof: int) -> float:
    lo, hi = 0.0, 1.0
    while chi2_cdf_quadrature(hi, dof) < q:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if chi2_cdf_quadrature(mid, dof) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def x_grid_max(g: Callable[[float], float], grid) -> tuple:
    """Exhaustive maximisation of ``g`` over ``grid``; returns ``(x, g(x))``."""
    vals = [g(x) for x in grid]
    k = int(np.argmax(vals))
    return grid[k], vals[k]


def simplex_x_grid(d: int, step: float) -> np.ndarray:
    """All points of the d-simplex on a grid of the given step (d <= 4)."""
    K = round(1.0 / step)
    return np.vstack([np.stack(c, axis=1) for c in _simplex_chunks(d, K)]) / K


def profile_grid_interval(counts, d, target: float, theta_step=1e-4, p_step=1e-4) -> tuple:
    """Endpoints of ``{theta : z(theta) >= target}`` by two nested grid scans.

    ``z(theta)`` is the largest ``sum N_i log p_i`` over the simplex segment
    with mean ``theta``, scanned on a ``p_step`` grid (2 or 3 observed points).
    Also returns the number of sign changes of ``z - target`` along the
    theta grid.
    """
    counts = np.asarray(counts, dtype=float)
    d = np.asarray(d, dtype=float)
    keep = counts > 0
    counts, d = counts[keep], d[keep]
    order = np.argsort(d)
    counts, d = counts[order], d[order]
    thetas = np.arange(d[0] + theta_step, d[-1], theta_step)
    z = np.empty(len(thetas))
    if len(d) == 2:
        p2 = (thetas - d[0]) / (d[1] - d[0])
        z = counts[0] * np.log1p(-p2) + counts[1] * np.log(p2)
    elif len(d) == 3:
        t = np.arange(p_step, 1.0, p_step)
        for k, th in enumerate(thetas):
            # p1 = t; p2, p3 solve p2 + p3 = 1 - t, d2 p2 + d3 p3 = th - d1 t
            p3 = (th - d[0] * t - d[1] * (1.0 - t)) / (d[2] - d[1])
            p2 = 1.0 - t - p3
            ok = (p2 > 0) & (p3 > 0)
            if not ok.any():
                z[k] = -math.inf
                continue
            z[k] = np.max(counts[0] * np.log(t[ok]) + counts[1] * np.log(p2[ok]) + counts[2] * np.log(p3[ok]))
    else:
        raise ValueError("profile grid oracle supports 2 or 3 observed points")
    inside = z >= target
    idx = np.flatnonzero(inside)
    sign = np.sign(z - target)
    changes = int(np.sum(sign[1:] != sign[:-1]))
    return float(thetas[idx[0]]), float(thetas[idx[-1]]), changes, thetas, z
