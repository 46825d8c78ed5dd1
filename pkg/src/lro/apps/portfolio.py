"""Likelihood-robust portfolio selection and a rolling-window backtest.

Each observed return row is a scenario. Mass the worst case puts outside the
observed rows can go anywhere in the support model ``Omega``; since the payoff
``r.x`` is linear, that mass sits at the cheapest point of ``Omega``:

    box  [r_lo, r_hi]   ->  r_lo . x           (x >= 0)
    ball |r - r0| <= eta ->  r0 . x - eta |x|

so ``Omega`` is represented by one extra zero-count scenario with that payoff.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..calibration import select_gamma
from ..core import DecisionProblem, LikelihoodSet, ObservationSet, Simplex
from ..outer import OuterResult, optimize_simplex

USED_WEIGHT = 1e-4


@dataclass(frozen=True)
class BoxSupport:
    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True)
class BallSupport:
    center: np.ndarray
    radius: float


def default_box(returns: np.ndarray, widen: float = 0.5) -> BoxSupport:
    """Componentwise min/max of the rows widened by ``widen`` times the range."""
    lo, hi = returns.min(axis=0), returns.max(axis=0)
    pad = widen * (hi - lo)
    return BoxSupport(lo - pad, hi + pad)


@dataclass
class PortfolioInstance:
    returns: np.ndarray  # N x d
    support_model: Optional[object] = None  # BoxSupport, BallSupport, or None (observed rows only)
    gamma: Optional[float] = None  # None: select_gamma at alpha with dof = number of rows
    alpha: float = 0.05

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.returns, dtype=float))
        if r.shape[0] < 1 or r.shape[1] < 1:
            raise ValueError("returns must have at least one row and one asset")
        if not np.all(np.isfinite(r)):
            raise ValueError("returns must be finite")
        self.returns = r
        sm = self.support_model
        if isinstance(sm, BoxSupport):
            lo, hi = np.asarray(sm.lo, float), np.asarray(sm.hi, float)
            if lo.shape != (r.shape[1],) or hi.shape != (r.shape[1],):
                raise ValueError("box bounds need one entry per asset")
            if np.any(r < lo - 1e-12) or np.any(r > hi + 1e-12):
                raise ValueError("box support must contain every observed return row")
            self.support_model = BoxSupport(lo, hi)
        elif isinstance(sm, BallSupport):
            c = np.asarray(sm.center, float)
            if c.shape != (r.shape[1],) or sm.radius < 0:
                raise ValueError("ball needs a center per asset and a nonnegative radius")
            if np.any(np.linalg.norm(r - c, axis=1) > sm.radius * (1 + 1e-12) + 1e-12):
                raise ValueError("ball support must contain every observed return row")
            self.support_model = BallSupport(c, float(sm.radius))
        elif sm is not None:
            raise TypeError("support_model must be BoxSupport, BallSupport or None")

    @property
    def d(self) -> int:
        return self.returns.shape[1]


def _build(inst: PortfolioInstance):
    """Observation set (duplicate rows merged) and the decision problem."""
    r = inst.returns
    base = ObservationSet.from_samples(r)
    rows, counts = base.support, base.counts
    sm = inst.support_model
    if sm is not None:
        # a label row for Omega's cheapest point; its coordinates are never read
        label = rows.max(axis=0) + 1.0
        rows = np.vstack([rows, label])
        counts = np.append(counts, 0)
    obs = ObservationSet(rows, counts)
    m = len(base.counts)

    def objective(x, support):
        h = support @ x
        if sm is not None:
            h[m:] = _omega_min(sm, x)
        return h

    def supergradient(x, support):
        g = np.array(support, dtype=float)
        if isinstance(sm, BoxSupport):
            g[m:] = sm.lo
        elif isinstance(sm, BallSupport):
            nx = float(np.linalg.norm(x))
            g[m:] = sm.center - (sm.radius * x / nx if nx > 0 else 0.0)
        return g

    problem = DecisionProblem(objective, Simplex(inst.d), supergradient=supergradient, name="portfolio")
    return base, obs, problem


def _omega_min(sm, x) -> float:
    if isinstance(sm, BoxSupport):
        return float(sm.lo @ x)
    return float(sm.center @ x - sm.radius * np.linalg.norm(x))


def portfolio_gamma(inst: PortfolioInstance) -> float:
    if inst.gamma is not None:
        return float(inst.gamma)
    base = ObservationSet.from_samples(inst.returns)
    # one degree of freedom per observed day
    return select_gamma(base, inst.alpha, inst.returns.shape[0]).gamma


def portfolio_lro(inst: PortfolioInstance, max_iter: int = 5000, gap_tol: float = 1e-7) -> OuterResult:
    """Weights on the simplex maximising the worst-case expected return."""
    base, obs, problem = _build(inst)
    lset = LikelihoodSet(obs, portfolio_gamma(inst))
    if inst.d == 1:
        x = np.ones(1)
        from ..inner import worst_case_expectation

        sol = worst_case_expectation(lset, problem.payoff(x, obs.support))
        return OuterResult(decision=x, value=sol.value, inner=sol, iterations=0)
    return optimize_simplex(problem, lset, max_iter=max_iter, gap_tol=gap_tol)


# -- returns data ------------------------------------------------------------------

def read_returns_csv(text: str):
    """Header of asset names, then one row of fractional returns per day."""
    reader = csv.reader(io.StringIO(text))
    try:
        names = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("empty returns CSV") from None
    if not names or any(not n for n in names):
        raise ValueError("returns CSV header must name every asset")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(names):
            raise ValueError(f"line {lineno}: expected {len(names)} fields, got {len(row)}")
        try:
            rows.append([float(c) for c in row])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ValueError("returns CSV has no data rows")
    a = np.array(rows, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("returns must be finite")
    return names, a


def write_returns_csv(names: Sequence[str], returns: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names))
    for row in returns:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def synthetic_returns(days: int, seed: int, drift=(0.0004, 0.0008, 0.0006, 0.0002), vol=(0.010, 0.030, 0.020, 0.015)):
    """Geometric-noise daily returns ``exp(drift + vol * z) - 1`` for each asset."""
    drift = np.asarray(drift, dtype=float)
    vol = np.asarray(vol, dtype=float)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((days, len(drift)))
    names = [f"A{j + 1}" for j in range(len(drift))]
    return names, np.expm1(drift + vol * z)


# -- backtest ------------------------------------------------------------------------

STRATEGIES = ("LRO", "SS", "EQ")


@dataclass
class BacktestReport:
    strategy: str
    cumulative_return: float
    mean_daily: float
    std_daily: float
    wins_vs: dict
    diversification_histogram: dict

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "cumulative_return": self.cumulative_return,
            "mean_daily": self.mean_daily,
            "std_daily": self.std_daily,
            "wins_vs": dict(self.wins_vs),
            "diversification_histogram": dict(self.diversification_histogram),
        }


@dataclass
class BacktestResult:
    reports: list
    weights: dict  # strategy -> (days x d) array
    daily_returns: dict  # strategy -> array of realised returns

    def to_json_obj(self) -> list:
        return [r.to_dict() for r in self.reports]


def single_stock_weights(window: np.ndarray) -> np.ndarray:
    """All weight on the asset with the best trailing mean (lowest index on ties)."""
    w = np.zeros(window.shape[1])
    w[int(np.argmax(window.mean(axis=0)))] = 1.0
    return w


def _lro_day(window: np.ndarray, alpha: float, widen: float) -> np.ndarray:
    inst = PortfolioInstance(window, default_box(window, widen), alpha=alpha)
    return portfolio_lro(inst).decision


def worker_count() -> int:
    """Thread cap from ``LRO_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get("LRO_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("LRO_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def backtest(returns: np.ndarray, window: int = 30, alpha: float = 0.05, widen: float = 0.5, threads: Optional[int] = None) -> BacktestResult:
    """Re-optimise each day on the previous ``window`` rows and hold for one day."""
    r = np.asarray(returns, dtype=float)
    if r.ndim != 2:
        raise ValueError("returns must be a days x assets matrix")
    if window < 2:
        raise ValueError("window must be at least 2")
    if r.shape[0] < window + 1:
        raise ValueError(f"need at least {window + 1} rows for a window of {window}")
    days = range(window, r.shape[0])
    d = r.shape[1]
    windows = [r[t - window:t] for t in days]
    threads = worker_count() if threads is None else threads
    # days are independent; map keeps the output in day order
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            lro_w = list(ex.map(lambda w: _lro_day(w, alpha, widen), windows))
    else:
        lro_w = [_lro_day(w, alpha, widen) for w in windows]
    weights = {
        "LRO": np.array(lro_w),
        "SS": np.array([single_stock_weights(w) for w in windows]),
        "EQ": np.full((len(windows), d), 1.0 / d),
    }
    realised = r[window:]
    daily = {s: np.einsum("ij,ij->i", weights[s], realised) for s in STRATEGIES}
    reports = []
    for s in STRATEGIES:
        ret = daily[s]
        used = np.count_nonzero(weights[s] > USED_WEIGHT, axis=1)
        hist = {str(k): int(np.count_nonzero(used == k)) for k in range(1, d + 1)}
        wins = {o: int(np.count_nonzero(ret > daily[o])) for o in STRATEGIES if o != s}
        reports.append(BacktestReport(
            strategy=s,
            cumulative_return=float(np.prod(1.0 + ret) - 1.0),
            mean_daily=float(ret.mean()),
            std_daily=float(ret.std()),
            wins_vs=wins,
            diversification_histogram=hist,
        ))
    return BacktestResult(reports, weights, daily)
