"""Newsvendor under a likelihood-robust demand distribution, with its baselines.

Demand lives on an integer grid. The cost of stocking ``x`` against demand
``d`` is ``b (d - x)^+ + h (x - d)^+``; the solvers maximise the negated cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ..calibration import select_gamma, user_gamma
from ..core import DecisionProblem, Interval, LikelihoodSet, ObservationSet, moment_constraints
from ..inner import worst_case_expectation
from ..outer import OuterResult, optimize_scalar


@dataclass(frozen=True)
class NewsvendorInstance:
    b: float
    h_cost: float
    observations: ObservationSet  # scalar support: the integer demand grid

    def __post_init__(self):
        if not (self.b > 0 and self.h_cost > 0):
            raise ValueError("underage and overage costs must be positive")
        if self.observations.support.ndim != 1:
            raise ValueError("newsvendor demand support must be scalar")

    @property
    def support(self) -> np.ndarray:
        return self.observations.support

    @property
    def critical_fractile(self) -> float:
        return self.b / (self.b + self.h_cost)

    def costs(self, x) -> np.ndarray:
        d = self.support
        return self.b * np.maximum(d - x, 0.0) + self.h_cost * np.maximum(x - d, 0.0)

    def problem(self) -> DecisionProblem:
        lo, hi = float(self.support.min()), float(self.support.max())
        return DecisionProblem(
            objective=lambda x, support: -(self.b * np.maximum(support - x, 0.0) + self.h_cost * np.maximum(x - support, 0.0)),
            feasible_set=Interval(math.ceil(lo), math.floor(hi), integer=True),
            name="newsvendor",
        )


def sample_moments(obs: ObservationSet):
    """Sample mean and population (1/N) standard deviation of the observed demand."""
    p = obs.mle()
    mu = float(p @ obs.support)
    var = float(p @ (obs.support - mu) ** 2)
    return mu, math.sqrt(max(var, 0.0))


def newsvendor_lro(inst: NewsvendorInstance, gamma: float, moment_constraints_: bool = False) -> OuterResult:
    """Stock level minimising the worst-case expected cost over the likelihood set.

    With ``moment_constraints_`` the set is further restricted to distributions
    sharing the sample mean and variance. ``OuterResult.value`` is reported as
    a cost (the negated worst-case reward).
    """
    sc = None
    if moment_constraints_:
        mu, sigma = sample_moments(inst.observations)
        sc = moment_constraints(inst.support, mu, mu * mu + sigma * sigma)
    lset = LikelihoodSet(inst.observations, gamma, sc)
    res = optimize_scalar(inst.problem(), lset)
    return OuterResult(decision=int(res.decision), value=-res.value, inner=res.inner, iterations=res.iterations)


def newsvendor_scarf(mu_hat: float, sigma_hat: float, b: float, h_cost: float) -> float:
    """Closed-form mean-variance robust stock level."""
    if sigma_hat < 0:
        raise ValueError("sigma_hat must be nonnegative")
    return mu_hat + 0.5 * sigma_hat * (math.sqrt(b / h_cost) - math.sqrt(h_cost / b))


def scarf_worst_case(x: float, mu: float, sigma: float):
    """Two-point worst case of the mean-variance set at decision x: ``(points, probs)``."""
    s = math.sqrt(sigma * sigma + (x - mu) ** 2)
    if s == 0.0:
        return np.array([x]), np.array([1.0])
    p_hi = 0.5 * (1.0 + (mu - x) / s)
    return np.array([x - s, x + s]), np.array([1.0 - p_hi, p_hi])


def quantile_decision(support, p, fractile: float) -> int:
    """Smallest grid point whose CDF reaches the fractile."""
    cdf = np.cumsum(p)
    k = int(np.searchsorted(cdf, fractile - 1e-12))
    return int(support[min(k, len(support) - 1)])


def newsvendor_empirical(inst: NewsvendorInstance) -> int:
    return quantile_decision(inst.support, inst.observations.mle(), inst.critical_fractile)


def evaluate_decision(x: float, dist, inst: NewsvendorInstance) -> float:
    """Expected cost of stocking x when demand follows ``dist`` on the instance grid."""
    dist = np.asarray(dist, dtype=float)
    return float(dist @ inst.costs(x))


def evaluate_lro_measure(x: float, lset: LikelihoodSet, inst: NewsvendorInstance) -> float:
    """Worst-case expected cost of x over the likelihood set."""
    return -worst_case_expectation(lset, -inst.costs(x)).value


def total_variation(points_a, probs_a, points_b, probs_b) -> float:
    """TV distance between two finitely supported distributions on the real line."""
    pts = np.union1d(points_a, points_b)
    pa = np.zeros(len(pts))
    pb = np.zeros(len(pts))
    np.add.at(pa, np.searchsorted(pts, points_a), probs_a)
    np.add.at(pb, np.searchsorted(pts, points_b), probs_b)
    return 0.5 * float(np.abs(pa - pb).sum())


# -- synthetic demand -----------------------------------------------------------

@dataclass(frozen=True)
class DemandModel:
    """Truncated normal(mean, sd) or truncated exponential(rate) on [lo, hi]."""

    kind: str  # "trunc-normal" or "trunc-exp"
    params: tuple
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind == "trunc-normal":
            if len(self.params) != 2 or self.params[1] <= 0:
                raise ValueError("trunc-normal needs mean,sd with sd > 0")
        elif self.kind == "trunc-exp":
            if len(self.params) != 1 or self.params[0] <= 0:
                raise ValueError("trunc-exp needs a positive rate")
        else:
            raise ValueError(f"unknown demand model {self.kind!r}")
        if not self.lo < self.hi:
            raise ValueError("demand bounds must satisfy lo < hi")

    @classmethod
    def parse(cls, spec: str, lo: float, hi: float) -> "DemandModel":
        """``"trunc-normal:50,50"`` or ``"trunc-exp:0.02"``."""
        kind, _, rest = spec.partition(":")
        try:
            params = tuple(float(v) for v in rest.split(",")) if rest else ()
        except ValueError:
            raise ValueError(f"bad parameters in {spec!r}") from None
        return cls(kind, params, lo, hi)

    def _draw(self, rng, m):
        if self.kind == "trunc-normal":
            return rng.normal(self.params[0], self.params[1], size=m)
        return rng.exponential(1.0 / self.params[0], size=m)

    def _cdf(self, t):
        if self.kind == "trunc-normal":
            return stats.norm.cdf(t, loc=self.params[0], scale=self.params[1])
        return stats.expon.cdf(t, scale=1.0 / self.params[0])

    def sample(self, n: int, seed: int) -> np.ndarray:
        """n draws by rejection against [lo, hi], rounded to integers."""
        rng = np.random.default_rng(seed)
        out = np.empty(0)
        while len(out) < n:
            x = self._draw(rng, max(n, 64))
            out = np.concatenate([out, x[(x >= self.lo) & (x <= self.hi)]])
        return np.rint(out[:n])

    def grid(self) -> np.ndarray:
        return np.arange(math.ceil(self.lo), math.floor(self.hi) + 1, dtype=float)

    def pmf(self) -> np.ndarray:
        """Probability that the rounded truncated draw equals each grid point."""
        g = self.grid()
        edges = np.clip(np.concatenate([g - 0.5, [g[-1] + 0.5]]), self.lo, self.hi)
        mass = np.diff(self._cdf(edges))
        return mass / mass.sum()


# -- the full comparison ----------------------------------------------------------

METHODS = ("LRO", "LRO(mu,sigma2)", "Scarf", "Empirical", "Underlying")


@dataclass
class NewsvendorComparison:
    gamma: float
    dof: int
    mu_hat: float
    sigma_hat: float
    scarf_raw: float
    decisions: dict
    true_cost: Optional[dict]
    lro_cost: dict
    worst_cases: dict  # method -> (points, probs)
    tv_to_empirical: dict


def compare_methods(inst: NewsvendorInstance, alpha: float = 0.05, dof_rule="explicit:100", true_pmf=None, gamma: Optional[float] = None) -> NewsvendorComparison:
    """Decisions of every method plus both evaluation columns.

    ``true_pmf`` (aligned with the grid) enables the "Underlying" method and
    the true-cost column. ``gamma`` overrides the calibrated threshold.
    """
    obs = inst.observations
    gc = select_gamma(obs, alpha, dof_rule) if gamma is None else user_gamma(obs, gamma)
    lset = LikelihoodSet(obs, gc.gamma)
    mu, sigma = sample_moments(obs)

    lro = newsvendor_lro(inst, gc.gamma)
    lro_ms = newsvendor_lro(inst, gc.gamma, moment_constraints_=True)
    scarf_raw = newsvendor_scarf(mu, sigma, inst.b, inst.h_cost)
    lo, hi = int(inst.support.min()), int(inst.support.max())
    decisions = {
        "LRO": lro.decision,
        "LRO(mu,sigma2)": lro_ms.decision,
        "Scarf": int(min(max(round(scarf_raw), lo), hi)),
        "Empirical": newsvendor_empirical(inst),
    }
    if true_pmf is not None:
        decisions["Underlying"] = quantile_decision(inst.support, true_pmf, inst.critical_fractile)

    lro_cost = {m: (lro.value if m == "LRO" else evaluate_lro_measure(x, lset, inst)) for m, x in decisions.items()}
    true_cost = None if true_pmf is None else {m: evaluate_decision(x, true_pmf, inst) for m, x in decisions.items()}

    emp = (inst.support[obs.observed], obs.mle()[obs.observed])
    worst = {
        "LRO": (inst.support, lro.inner.distribution),
        "LRO(mu,sigma2)": (inst.support, lro_ms.inner.distribution),
        "Scarf": scarf_worst_case(scarf_raw, mu, sigma),
    }
    tv = {m: total_variation(pts, pr, *emp) for m, (pts, pr) in worst.items()}
    return NewsvendorComparison(gc.gamma, gc.dof, mu, sigma, scarf_raw, decisions, true_cost, lro_cost, worst, tv)


def newsvendor_band(band, support, b: float, h_cost: float):
    """Stock level minimising the worst-case expected cost over a CDF band.

    ``support`` = (lo, hi) bounds the demand. Decisions are continuous on
    [lo, hi]; ``OuterResult.value`` is reported as a cost.
    """
    from ..band import band_optimize_scalar

    if not (b > 0 and h_cost > 0):
        raise ValueError("underage and overage costs must be positive")
    problem = DecisionProblem(
        objective=lambda x, xi: -(b * np.maximum(xi - x, 0.0) + h_cost * np.maximum(x - xi, 0.0)),
        feasible_set=Interval(float(support[0]), float(support[1])),
        name="newsvendor-band",
    )
    res = band_optimize_scalar(problem, band, support)
    return OuterResult(decision=res.decision, value=-res.value, inner=res.inner, iterations=res.iterations)
