"""Robust expectations over a band of CDFs for a scalar uncertain parameter.

A band ``{F : L_i <= F(X_i) <= U_i}`` at sample points ``X_1 < ... < X_n``.
For ``h`` concave in ``xi`` the inner minimisation reduces to the finite LP

    max  sum_i z_i L_i - sum_i y_i U_i + lambda
    s.t. sum_{i>=k} (z_i - y_i) + lambda <= min(h(X_{k-1}), h(X_k)),  k = 1..n+1
         y, z >= 0,

with ``X_0`` and ``X_{n+1}`` taken as the declared support bounds. The LP row
multipliers are the masses the worst-case CDF puts on each knot interval.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .core import DecisionProblem, EmptySet, Interval
from .lp import LPUnbounded, linprog
from .outer import OuterResult, maximize_concave_scalar


class EmptyBand(EmptySet):
    """No CDF satisfies the band (the robust LP is unbounded)."""


@dataclass(frozen=True)
class CdfBand:
    points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        lo = np.array(self.lower, dtype=float)
        up = np.array(self.upper, dtype=float)
        if not (pts.ndim == lo.ndim == up.ndim == 1 and len(pts) == len(lo) == len(up)):
            raise ValueError("points, lower and upper must be 1-d arrays of equal length")
        if len(pts) == 0:
            raise ValueError("band needs at least one point")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("band points must be strictly increasing (duplicates are not supported)")
        if np.any(lo < 0) or np.any(up > 1) or np.any(lo > 1) or np.any(up < 0):
            raise ValueError("band bounds must lie in [0, 1]")
        for name, a in (("points", pts), ("lower", lo), ("upper", up)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return len(self.points)

    def is_nonempty(self) -> bool:
        """True iff some nondecreasing F meets every bound: ``L_i <= U_j`` for all ``i <= j``."""
        run_max_lower = np.maximum.accumulate(self.lower)
        return bool(np.all(run_max_lower <= self.upper + 1e-12))

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.lower) >= 0) and np.all(np.diff(self.upper) >= 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "lower", "upper"])
        for x, lo, up in zip(self.points, self.lower, self.upper):
            writer.writerow([repr(float(x)), repr(float(lo)), repr(float(up))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CdfBand":
        reader = csv.reader(io.StringIO(text))
        header = [h.strip() for h in next(reader)]
        if header != ["x", "lower", "upper"]:
            raise ValueError("band CSV header must be x,lower,upper")
        rows = [[float(c) for c in row] for row in reader if row]
        a = np.array(rows, dtype=float)
        return cls(a[:, 0], a[:, 1], a[:, 2])


def ks_critical_value(n: int, alpha: float) -> float:
    """Asymptotic Kolmogorov-Smirnov bound ``sqrt(ln(2/alpha) / (2n))``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ks_band(samples, alpha: float, D: Optional[float] = None) -> CdfBand:
    """KS confidence band ``i/n - D <= F(X_i) <= (i-1)/n + D`` (clamped to [0, 1]).

    ``samples`` must be sorted and distinct. ``D`` defaults to the asymptotic
    critical value; pass an exact small-sample quantile to override it.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("samples must be a non-empty 1-d array")
    if np.any(np.diff(x) <= 0):
        raise ValueError("samples must be sorted and distinct")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    n = len(x)
    if D is None:
        D = ks_critical_value(n, alpha)
    i = np.arange(1, n + 1)
    lower = np.clip(i / n - D, 0.0, 1.0)
    upper = np.clip((i - 1) / n + D, 0.0, 1.0)
    return CdfBand(x, lower, upper)


@dataclass(frozen=True)
class BandRobustSolution:
    value: float
    y: np.ndarray
    z: np.ndarray
    lambda_: float
    masses: np.ndarray  # worst-case mass on each knot interval (X_{k-1}, X_k], k = 1..n+1
    active_knots: np.ndarray
    dual_residual: float


def knot_payoffs(band: CdfBand, h: Callable[[np.ndarray], np.ndarray], support: Tuple[float, float]) -> np.ndarray:
    """``c_k = min(h(X_{k-1}), h(X_k))`` for k = 1..n+1 with truncated end knots."""
    lo, hi = float(support[0]), float(support[1])
    if lo > band.points[0] or hi < band.points[-1]:
        raise ValueError("support bounds must enclose the band points")
    knots = np.concatenate([[lo], band.points, [hi]])
    hk = np.asarray(h(knots), dtype=float)
    if hk.shape != knots.shape or not np.all(np.isfinite(hk)):
        raise ValueError("h must return finite values at every knot")
    return np.minimum(hk[:-1], hk[1:])


def band_worst_case(band: CdfBand, h: Callable[[np.ndarray], np.ndarray], support: Tuple[float, float]) -> BandRobustSolution:
    """Minimum of ``E_F[h]`` over CDFs in the band, for ``h`` concave in ``xi``."""
    n = band.n
    c = knot_payoffs(band, h, support)
    # variables [z_1..z_n, y_1..y_n, lambda+, lambda-]; rows k = 1..n+1
    A = np.zeros((n + 1, 2 * n + 2))
    for k in range(n + 1):
        A[k, k:n] = 1.0
        A[k, n + k:2 * n] = -1.0
    A[:, 2 * n] = 1.0
    A[:, 2 * n + 1] = -1.0
    cost = -np.concatenate([band.lower, -band.upper, [1.0, -1.0]])
    try:
        res = linprog(cost, A_ub=A, b_ub=c)
    except LPUnbounded:
        raise EmptyBand("no CDF lies within the band", float("inf")) from None
    z = res.x[:n]
    y = res.x[n:2 * n]
    lam = float(res.x[2 * n] - res.x[2 * n + 1])
    masses = np.maximum(-res.dual_ub, 0.0)
    value = float(band.lower @ z - band.upper @ y + lam)
    lhs = A[:, :2 * n] @ res.x[:2 * n] + lam
    residual = max(float(np.max(lhs - c, initial=0.0)), float(-min(z.min(), y.min(), 0.0)))
    active = np.flatnonzero(masses > 1e-12)
    return BandRobustSolution(value, y, z, lam, masses, active, residual)


def band_optimize_scalar(problem: DecisionProblem, band: CdfBand, support: Tuple[float, float], rel_tol: float = 1e-4) -> OuterResult:
    """Maximise ``min_{F in band} E_F[h(x, xi)]`` over a scalar interval of ``x``."""
    fs = problem.feasible_set
    if not isinstance(fs, Interval):
        raise TypeError("band_optimize_scalar needs an Interval feasible set")
    if not band.is_nonempty():
        raise EmptyBand("no CDF lies within the band", float("inf"))
    solves = {}

    def g(x):
        sol = band_worst_case(band, lambda xi: problem.objective(x, xi), support)
        solves[float(x)] = sol
        return sol.value

    x, val, evals = maximize_concave_scalar(g, fs, rel_tol=rel_tol)
    inner = solves.get(float(x)) or band_worst_case(band, lambda xi: problem.objective(x, xi), support)
    return OuterResult(decision=x, value=inner.value, inner=inner, iterations=evals)
