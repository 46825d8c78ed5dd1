"""Worst-case expectation over a likelihood set for a fixed payoff vector.

For payoffs ``h`` the inner problem is

    min_p  sum_i p_i h_i   s.t.  sum_{N_i>0} N_i log p_i >= gamma,  p in simplex.

Its Lagrangian dual in ``(lambda, mu)`` is

    mu + lambda (gamma + N - sum N_i log N_i) - N lambda log lambda
       + lambda sum N_i log(h_i - mu),     lambda >= 0,  h_i - mu >= 0 for all i.

For fixed ``mu`` the optimal ``lambda`` is closed form,

    log lambda(mu) = (gamma - sum N_i log N_i + sum N_i log(h_i - mu)) / N,

and the reduced dual is ``mu + N lambda(mu)``. Its derivative is
``1 - sum_i lambda N_i / (h_i - mu)``, so the optimum is where the candidate
worst case ``p_i = lambda N_i / (h_i - mu)`` sums to one. We search over
``s = log(min h - mu)`` which keeps every quantity in log space.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import (
    LIKELIHOOD_TOL,
    EmptySet,
    LikelihoodSet,
    NumericalFailure,
    WorstCaseSolution,
    validate_likelihood_set,
)

MAX_ITER = 10_000


def _logsumexp(a: np.ndarray) -> float:
    amax = np.max(a)
    if not np.isfinite(amax):
        return float(amax)
    return float(amax + np.log(np.sum(np.exp(a - amax))))


def _mle_solution(counts, h, lam, mu) -> WorstCaseSolution:
    p = counts / counts.sum()
    value = float(p @ h)
    return WorstCaseSolution(value=value, distribution=p, lambda_=lam, mu=mu, kkt_residual=0.0, dual_value=value, dual_slack=h - mu)


def worst_case_from_counts(counts, h, gamma: float) -> WorstCaseSolution:
    """Solve the inner problem for raw counts and payoffs.

    Zero-count support points take part only through the dual constraint
    ``h_i >= mu``; they receive mass only when ``mu`` sits at their payoff.
    """
    counts = np.asarray(counts, dtype=float)
    h = np.asarray(h, dtype=float)
    if counts.shape != h.shape:
        raise ValueError("payoff vector length must match the support")
    if not np.all(np.isfinite(h)):
        raise ValueError("payoffs must be finite")
    obs = counts > 0
    N = counts.sum()
    n_obs = counts[obs]
    mll = float(np.sum(n_obs * np.log(n_obs / N)))
    if gamma > mll + LIKELIHOOD_TOL * 1e-3 * (1.0 + abs(mll)):
        raise EmptySet(f"gamma={gamma:.12g} exceeds the maximum log-likelihood {mll:.12g}", gamma - mll)

    lo, hi = float(h.min()), float(h.max())
    if hi - lo <= 1e-15 * (1.0 + abs(lo)):
        # constant payoff: every member of the set has the same expectation
        return _mle_solution(counts, h, 0.0, lo)
    if gamma >= mll - 1e-12 * (1.0 + abs(mll)):
        return _mle_solution(counts, h, math.inf, -math.inf)

    delta = h - lo
    d_obs = delta[obs]
    if np.all(d_obs == 0.0):
        # every observed point is a minimiser, so the MLE is optimal and the likelihood constraint is slack
        return _mle_solution(counts, h, 0.0, lo)
    with np.errstate(divide="ignore"):
        log_d = np.log(d_obs)
    const = gamma - float(np.sum(n_obs * np.log(n_obs)))
    log_n = np.log(n_obs)

    def evaluate(s):
        # lt_i = log(h_i - mu) with mu = lo - exp(s)
        lt = np.logaddexp(log_d, s)
        loglam = (const + float(n_obs @ lt)) / N
        logp = loglam + log_n - lt
        return _logsumexp(logp), loglam, logp, lt

    def slope(s, loglam, logp, lt):
        w = np.exp(s - lt)
        dlam = float(n_obs @ w) / N
        soft = np.exp(logp - _logsumexp(logp))
        return float(soft @ (dlam - w))

    p = np.zeros_like(h)
    if np.all(d_obs > 0):
        # minimum attained only at unobserved points: mu may sit on the boundary
        lt0 = log_d
        loglam0 = (const + float(n_obs @ lt0)) / N
        logp0 = loglam0 + log_n - lt0
        if _logsumexp(logp0) <= 0.0:
            p[obs] = np.exp(logp0)
            ties = (~obs) & (delta == 0.0)
            p[ties] = max(1.0 - p[obs].sum(), 0.0) / ties.sum()
            lam = math.exp(loglam0)
            value = lo + float(p @ delta)
            dual = lo + N * lam
            resid = max(abs(p.sum() - 1.0), abs(dual - value))
            return WorstCaseSolution(value, p, lam, lo, resid, dual, delta)

    # bracket the root of f(s) = log sum p(s); f is decreasing in s
    s0 = math.log(hi - lo)
    f0 = evaluate(s0)[0]
    s_lo = s_hi = s0
    f_lo = f_hi = f0
    step = 1.0
    for _ in range(200):
        if f_hi < 0.0:
            break
        s_lo, f_lo = s_hi, f_hi
        s_hi = s0 + step
        f_hi = evaluate(s_hi)[0]
        step *= 2.0
    else:
        raise NumericalFailure("could not bracket the dual root from above")
    step = 1.0
    for _ in range(200):
        if f_lo > 0.0:
            break
        s_hi, f_hi = s_lo, f_lo
        s_lo = s0 - step
        f_lo = evaluate(s_lo)[0]
        step *= 2.0
    else:
        raise NumericalFailure("could not bracket the dual root from below")

    # safeguarded Newton on f(s) = 0
    s = 0.5 * (s_lo + s_hi)
    for _ in range(MAX_ITER):
        f, loglam, logp, lt = evaluate(s)
        if f == 0.0 or abs(f) < 1e-15:
            break
        if f > 0.0:
            s_lo = s
        else:
            s_hi = s
        if s_hi - s_lo <= 1e-15 * (1.0 + abs(s)):
            break
        df = slope(s, loglam, logp, lt)
        s_new = s - f / df if df < 0.0 else math.nan
        if not (s_lo < s_new < s_hi):
            s_new = 0.5 * (s_lo + s_hi)
        s = s_new
    else:
        raise NumericalFailure("dual root search did not converge")

    f, loglam, logp, lt = evaluate(s)
    p[obs] = np.exp(logp)
    lam = math.exp(loglam)
    t = math.exp(s)
    mu = lo - t
    value = lo + float(p @ delta)
    dual = lo + (N * lam - t)
    loglik = N * loglam + float(n_obs @ (log_n - lt))
    resid = max(abs(p.sum() - 1.0), abs(loglik - gamma), abs(dual - value))
    slack = delta + t
    slack[obs] = np.exp(lt)
    return WorstCaseSolution(value, p, lam, mu, resid, dual, slack)


def worst_case_expectation(lset: LikelihoodSet, h) -> WorstCaseSolution:
    """Minimise ``E_p[h]`` over the likelihood set.

    Sets carrying side constraints are routed to
    :func:`worst_case_expectation_constrained`.
    """
    if lset.side_constraints is not None:
        return worst_case_expectation_constrained(lset, h)
    h = np.asarray(h, dtype=float)
    if h.shape != (lset.observations.n,):
        raise ValueError("payoff vector length must match the support")
    return worst_case_from_counts(lset.observations.counts, h, lset.gamma)


def _likelihood_slack_solution(lset: LikelihoodSet, h, A, b, n_eq) -> Optional[WorstCaseSolution]:
    """Vertex solution of ``min p.h`` under the linear rows alone, if it meets the threshold."""
    from .lp import LPInfeasible, LPUnbounded, linprog

    try:
        res = linprog(h, A_ub=-A[n_eq:], b_ub=-b[n_eq:], A_eq=A[:n_eq], b_eq=b[:n_eq])
    except (LPInfeasible, LPUnbounded):
        return None
    p = np.maximum(res.x, 0.0)
    obs_set = lset.observations
    obs = obs_set.observed
    if np.any(p[obs] <= 0.0):
        return None
    loglik = float(obs_set.counts[obs] @ np.log(p[obs]))
    if loglik < lset.gamma:
        return None
    mu = np.concatenate([res.dual_eq, -res.dual_ub])
    slack = h - A.T @ mu
    value = float(p @ h)
    dual = float(b @ mu)
    resid = max(abs(p.sum() - 1.0), lset.side_constraints.residual(p), abs(dual - value), float(np.max(-slack, initial=0.0)))
    return WorstCaseSolution(value, p, 0.0, mu, resid, dual, slack)


def _polish_zero_masses(p, zero, As, bs, n_eq, active_mass=1e-7):
    """Refit the masses of unobserved points that carry weight against the linear rows.

    The barrier gives them as ``tau / s`` with ``s`` tiny, so cancellation in ``s``
    costs digits; the observed masses are accurate and the rows pin the rest.
    Tight inequality rows count as equalities. ``p`` is updated in place only
    when the refit lowers the row residual.
    """
    active = zero & (p > active_mass)
    if not active.any():
        return
    gap = As @ p - bs
    rows = np.arange(len(bs)) < n_eq
    rows |= np.abs(gap) <= 1e-6
    M = As[rows][:, active]
    rhs = bs[rows] - As[rows][:, ~active] @ p[~active]
    q, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    q = np.maximum(q, 0.0)
    old = float(np.max(np.abs(M @ p[active] - rhs)))
    new = float(np.max(np.abs(M @ q - rhs)))
    if new < old:
        p[active] = q


def worst_case_expectation_constrained(lset: LikelihoodSet, h, tol: float = 1e-6) -> WorstCaseSolution:
    """Worst case over the likelihood set intersected with linear side constraints.

    Maximises the concave dual

        b.mu + N lambda(mu),  log lambda(mu) = (gamma - sum N_i log N_i + sum N_i log(h_i - a_i.mu)) / N

    over ``mu`` (free on equality rows, ``mu >= 0`` on inequality rows) with
    ``h_i - a_i.mu >= 0`` at unobserved points. Those bounds are handled by a
    log barrier whose weight is driven to zero; damped Newton steps follow the
    barrier path. The barrier multipliers give the mass on unobserved points.
    """
    obs_set = lset.observations
    sc = lset.side_constraints
    h = np.asarray(h, dtype=float)
    n = obs_set.n
    if h.shape != (n,):
        raise ValueError("payoff vector length must match the support")
    if sc is None:
        return worst_case_from_counts(obs_set.counts, h, lset.gamma)
    validate_likelihood_set(lset).raise_if_empty()

    A, b, n_eq = sc.stacked(n)
    m_rows = A.shape[0]
    counts = obs_set.counts.astype(float)
    obs = counts > 0
    zero = ~obs
    N = counts.sum()
    n_obs = counts[obs]
    const = lset.gamma - float(np.sum(n_obs * np.log(n_obs)))

    h_lo, h_hi = float(h.min()), float(h.max())
    R = h_hi - h_lo
    # h = A_eq^T nu makes the expectation constant on the set: the likelihood
    # multiplier vanishes and any member is a worst case
    nu = np.linalg.lstsq(A[:n_eq].T, h, rcond=None)[0]
    if np.max(np.abs(A[:n_eq].T @ nu - h)) <= 1e-12 * (1.0 + np.max(np.abs(h))):
        p = obs_set.mle()
        if sc.residual(p) > 1e-9:
            from .lp import linear_feasible_point

            p = linear_feasible_point(A[:n_eq], b[:n_eq], A[n_eq:], b[n_eq:])
        value = float(nu @ b[:n_eq])
        mu = np.zeros(m_rows)
        mu[:n_eq] = nu
        resid = max(abs(p.sum() - 1.0), sc.residual(p), abs(float(p @ h) - value))
        return WorstCaseSolution(value, p, 0.0, mu, resid, value, h - A.T @ mu)

    # if the side constraints alone already have a minimiser inside the likelihood
    # set, the likelihood constraint is slack (lambda = 0) and the dual optimum sits
    # on the boundary s_obs = 0, out of reach of the barrier path
    slack_sol = _likelihood_slack_solution(lset, h, A, b, n_eq)
    if slack_sol is not None:
        return slack_sol

    # normalise payoffs to [0, 1] and rows to unit max-abs
    hn = (h - h_lo) / R
    row_scale = np.max(np.abs(A), axis=1)
    row_scale[row_scale == 0.0] = 1.0
    As = A / row_scale[:, None]
    bs = b / row_scale
    ge = np.arange(m_rows) >= n_eq
    A_obs = As[:, obs]
    A_zero = As[:, zero]

    mu = np.zeros(m_rows)
    mu[ge] = 1.0
    mu[0] = float(np.min(hn - As[1:].T @ mu[1:])) - 1.0

    def parts(mu):
        s = hn - As.T @ mu
        return s, s[obs], s[zero]

    def objective(mu, tau):
        s, s_obs, s_zero = parts(mu)
        if np.any(s <= 0.0) or np.any(mu[ge] <= 0.0):
            return -math.inf, -math.inf
        loglam = (const + float(n_obs @ np.log(s_obs))) / N
        psi = float(bs @ mu) + N * math.exp(loglam)
        barrier = tau * (float(np.sum(np.log(s_zero))) + float(np.sum(np.log(mu[ge]))))
        return psi + barrier, psi

    def derivatives(mu, tau):
        s, s_obs, s_zero = parts(mu)
        lam = math.exp((const + float(n_obs @ np.log(s_obs))) / N)
        w = n_obs / s_obs
        u = A_obs @ w
        grad = bs - lam * u
        hess = lam * (np.outer(u, u) / N - (A_obs * (n_obs / s_obs**2)) @ A_obs.T)
        if A_zero.shape[1]:
            grad -= tau * (A_zero @ (1.0 / s_zero))
            hess -= tau * (A_zero * (1.0 / s_zero**2)) @ A_zero.T
        if np.any(ge):
            idx = np.flatnonzero(ge)
            grad[idx] += tau / mu[idx]
            hess[idx, idx] -= tau / mu[idx] ** 2
        return grad, hess

    n_barrier = int(zero.sum() + ge.sum())
    tau = 1e-2 if n_barrier else 0.0
    # the barrier leaves a duality gap of about tau * n_barrier in normalised units;
    # going much lower loses the masses tau / s to cancellation in s = h - A'mu
    tau_final = 1e-9 / max(n_barrier, 1)
    total = 0
    while True:
        for _ in range(500):
            total += 1
            if total > MAX_ITER:
                raise NumericalFailure("constrained dual ascent did not converge")
            grad, hess = derivatives(mu, tau)
            try:
                step = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(-hess, grad, rcond=None)[0]
            decrement = float(grad @ step)
            if not np.isfinite(decrement):
                raise NumericalFailure("non-finite Newton step in constrained dual")
            if decrement <= 1e-24 or np.max(np.abs(grad)) <= 1e-12:
                break
            f_cur, _ = objective(mu, tau)
            # Armijo with slack for rounding in f, so converged Newton steps are still taken
            slack = 1e-15 * (1.0 + abs(f_cur))
            alpha = 1.0
            while True:
                cand = mu + alpha * step
                f_new, psi_new = objective(cand, tau)
                if f_new >= f_cur + 0.25 * alpha * decrement - slack:
                    break
                alpha *= 0.5
                if alpha < 1e-16:
                    break
            if alpha < 1e-16 or (alpha < 1.0 and decrement < 1e-14):
                break
            mu = cand
            # weak duality: a dual value above max h certifies an empty set
            if psi_new > 1.0 + 1e-7:
                raise EmptySet("likelihood threshold and side constraints are jointly infeasible", psi_new - 1.0)
        if tau <= tau_final or n_barrier == 0:
            break
        tau = max(tau * 0.1, tau_final)

    s, s_obs, s_zero = parts(mu)
    loglam = (const + float(n_obs @ np.log(s_obs))) / N
    lam = math.exp(loglam)
    p = np.zeros(n)
    p[obs] = lam * n_obs / s_obs
    if zero.any():
        p[zero] = tau / s_zero
        _polish_zero_masses(p, zero, As, bs, n_eq)
    psi = float(bs @ mu) + N * lam
    value_n = float(p @ hn)

    # undo normalisation
    mu_orig = R * mu / row_scale
    mu_orig[0] += h_lo
    value = h_lo + R * value_n
    dual = h_lo + R * psi
    loglik = float(n_obs @ np.log(p[obs]))
    # side residual on the row-scaled system, so rows in large units are not penalised
    row_gap = As @ p - bs
    side = max(float(np.max(np.abs(row_gap[:n_eq]))), float(np.max(-row_gap[n_eq:], initial=0.0)))
    resid = max(
        abs(p.sum() - 1.0),
        side,
        abs(loglik - lset.gamma) if lam > 0 else 0.0,
        abs(dual - value),
    )
    if resid > tol * (1.0 + abs(value)):
        raise NumericalFailure(f"constrained solve ended with KKT residual {resid:.3g}")
    return WorstCaseSolution(value, p, R * lam, mu_orig, resid, dual, R * s)
