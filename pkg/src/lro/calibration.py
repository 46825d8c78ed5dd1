"""Threshold selection and empirical-likelihood confidence machinery."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .core import EmptySet, NumericalFailure, ObservationSet, max_log_likelihood

DofRule = Union[str, int]


# -- chi-square quantile -----------------------------------------------------

def regularized_lower_gamma(a: float, x: float) -> float:
    """``P(a, x) = gamma(a, x) / Gamma(a)``."""
    if a <= 0:
        raise ValueError("shape must be positive")
    return float(special.gammainc(a, max(x, 0.0)))


def chi_square_cdf(x: float, dof: int) -> float:
    return regularized_lower_gamma(dof / 2.0, x / 2.0)


def chi_square_quantile(dof: int, q: float) -> float:
    """``q``-quantile of the chi-square distribution, by bisection on the CDF."""
    if int(dof) != dof or dof < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    lo, hi = 0.0, float(dof) + 10.0
    while chi_square_cdf(hi, dof) < q:
        lo, hi = hi, 2.0 * hi
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if chi_square_cdf(mid, dof) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# -- threshold selection -----------------------------------------------------

@dataclass(frozen=True)
class GammaChoice:
    gamma: float
    alpha: float
    dof: int
    basis: str  # "asymptotic-chi-square" or "user-supplied"


def resolve_dof(obs: ObservationSet, dof_rule: DofRule) -> int:
    if isinstance(dof_rule, (int, np.integer)) and not isinstance(dof_rule, bool):
        dof = int(dof_rule)
    elif dof_rule == "support-minus-one":
        dof = obs.n - 1
    elif dof_rule == "observation-count":
        dof = obs.total
    elif isinstance(dof_rule, str) and dof_rule.startswith("explicit:"):
        dof = int(dof_rule.split(":", 1)[1])
    else:
        raise ValueError(f"unknown dof rule {dof_rule!r}")
    if dof < 1:
        raise ValueError(f"dof rule {dof_rule!r} gives {dof} degrees of freedom")
    return dof


def select_gamma(obs: ObservationSet, alpha: float, dof_rule: DofRule = "support-minus-one") -> GammaChoice:
    """Asymptotic (1 - alpha) threshold: max log-likelihood minus half a chi-square quantile.

    ``dof_rule`` is ``"support-minus-one"`` (the asymptotic result),
    ``"observation-count"``, or an explicit integer (``"explicit:k"`` also works).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    dof = resolve_dof(obs, dof_rule)
    gamma = max_log_likelihood(obs) - 0.5 * chi_square_quantile(dof, 1.0 - alpha)
    return GammaChoice(gamma=gamma, alpha=alpha, dof=dof, basis="asymptotic-chi-square")


def user_gamma(obs: ObservationSet, gamma: float) -> GammaChoice:
    mll = max_log_likelihood(obs)
    if gamma > mll:
        raise EmptySet("gamma exceeds the maximum log-likelihood", gamma - mll)
    return GammaChoice(gamma=gamma, alpha=float("nan"), dof=0, basis="user-supplied")


# -- Dirichlet posterior coverage ---------------------------------------------

def dirichlet_coverage(obs: ObservationSet, gamma: float, samples: int, seed: int, chunk: int = 4096) -> float:
    """Fraction of ``Dir(N_1 + 1, ..., N_n + 1)`` draws whose log-likelihood is at least gamma.

    Draws are normalised gamma variates from ``numpy.random.default_rng(seed)``
    (PCG64), one row per sample with variates in support order.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    shape = obs.counts.astype(float) + 1.0
    mask = obs.observed
    weights = obs.counts[mask].astype(float)
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        g = rng.standard_gamma(shape, size=(m, obs.n))
        logp = np.log(g) - np.log(g.sum(axis=1, keepdims=True))
        hits += int(np.count_nonzero(logp[:, mask] @ weights >= gamma))
        done += m
    return hits / samples


def coverage_standard_error(coverage: float, samples: int) -> float:
    return math.sqrt(max(coverage * (1.0 - coverage), 0.0) / samples)


# -- CLT for the empirical entropy ---------------------------------------------

@dataclass(frozen=True)
class EntropyCltStats:
    center: float
    limit_variance: float


def entropy_clt_stats(p_bar) -> EntropyCltStats:
    """Centre ``sum p log p`` and the limiting variance of ``sqrt(N)(sum (N_i/N) log(N_i/N) - centre)``.

    The variance is ``v' S v`` with ``v_i = 1 + log p_i`` and the multinomial
    covariance ``S = diag(p) - p p'``.
    """
    p = np.asarray(p_bar, dtype=float)
    if np.any(p <= 0):
        raise ValueError("p_bar must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p_bar must sum to one")
    v = 1.0 + np.log(p)
    cov = np.diag(p) - np.outer(p, p)
    var = float(v @ cov @ v)
    return EntropyCltStats(center=float(p @ np.log(p)), limit_variance=max(var, 0.0))


# -- profile likelihood of the mean ----------------------------------------------

@dataclass(frozen=True)
class ProfileLikelihoodInterval:
    theta_lo: float
    theta_hi: float
    target_loglik: float
    theta_hat: float


def _observed_payoffs(obs: ObservationSet, d):
    d = np.asarray(d, dtype=float)
    if d.shape != (obs.n,):
        raise ValueError("d must give one value per support point")
    mask = obs.observed
    dv, nv = d[mask], obs.counts[mask].astype(float)
    if np.ptp(dv) == 0.0:
        raise ValueError("d must take at least two distinct values on observed outcomes")
    return dv, nv


def _el_multiplier(w, e, tol=1e-10):
    """Root in t of sum w_i e_i / (1 + t e_i) = 0 with every 1 + t e_i > 0."""
    t_lo = -1.0 / e.max()
    t_hi = -1.0 / e.min()
    t = 0.0
    for _ in range(500):
        den = 1.0 + t * e
        f = float(np.sum(w * e / den))
        if abs(f) <= tol * 1e-3:
            return t
        if f > 0:
            t_lo = t
        else:
            t_hi = t
        df = -float(np.sum(w * e * e / den**2))
        t_new = t - f / df
        if not (t_lo < t_new < t_hi):
            t_new = 0.5 * (t_lo + t_hi)
        if t_new == t:
            return t
        t = t_new
    raise NumericalFailure("empirical likelihood multiplier did not converge")


def profile_log_likelihood(obs: ObservationSet, d, theta: float) -> float:
    """``z(theta) = max sum N_i log p_i`` over distributions on the observed points with mean ``theta``.

    Returns ``-inf`` outside the open hull of the observed values of ``d``.
    """
    dv, nv = _observed_payoffs(obs, d)
    if not dv.min() < theta < dv.max():
        return -math.inf
    N = nv.sum()
    w = nv / N
    e = dv - theta
    t = _el_multiplier(w, e)
    p = w / (1.0 + t * e)
    return float(nv @ np.log(p))


def profile_mean_interval(obs: ObservationSet, d, alpha: float) -> ProfileLikelihoodInterval:
    """The two means where the profile log-likelihood falls by ``chi2_{1,1-alpha} / 2``.

    Each endpoint is found by bisection between the empirical mean (where the
    profile peaks) and the corresponding end of the observed range (where it
    tends to ``-inf``).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    dv, nv = _observed_payoffs(obs, d)
    theta_hat = float(nv @ dv / nv.sum())
    target = max_log_likelihood(obs) - 0.5 * chi_square_quantile(1, 1.0 - alpha)

    def crossing(inside, outside):
        span = abs(outside - inside)
        for _ in range(400):
            mid = 0.5 * (inside + outside)
            if profile_log_likelihood(obs, d, mid) >= target:
                inside = mid
            else:
                outside = mid
            if abs(outside - inside) <= 1e-13 * (1.0 + span):
                break
        return 0.5 * (inside + outside)

    lo = crossing(theta_hat, float(dv.min()))
    hi = crossing(theta_hat, float(dv.max()))
    if not lo < theta_hat < hi:
        raise NumericalFailure("profile likelihood has no crossing on one side")
    return ProfileLikelihoodInterval(theta_lo=lo, theta_hi=hi, target_loglik=target, theta_hat=theta_hat)
