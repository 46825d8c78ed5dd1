"""Dense two-phase primal simplex with Bland's rule.

Small problems only (a few dozen rows). Solves

    minimize    c @ x
    subject to  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0

and reports the row duals so callers can read the complementary solution.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


class LPInfeasible(Exception):
    pass


class LPUnbounded(Exception):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    # duals y with c - A^T y >= 0 (reduced costs); y_ub <= 0 for <= rows
    dual_ub: np.ndarray
    dual_eq: np.ndarray
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _run(T: np.ndarray, basis: list, n_cols: int, max_iter: int) -> int:
    """Minimise the objective in the last row of ``T`` (stored as reduced costs)."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        cost = T[-1, :n_cols]
        # Bland: lowest-index column with negative reduced cost
        candidates = np.flatnonzero(cost < -PIVOT_TOL)
        if len(candidates) == 0:
            return it
        col = int(candidates[0])
        column = T[:m, col]
        pos = column > PIVOT_TOL
        if not np.any(pos):
            raise LPUnbounded("objective unbounded below")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))
        # Bland: among ties leave the basic variable with the lowest index
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise RuntimeError("simplex iteration cap reached")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 10_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, dtype=float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float))
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    # equality form with slacks on the <= rows; rows flipped so rhs >= 0
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    n_struct = n + m_ub

    # phase 1: an artificial per row (slack rows with rhs >= 0 reuse their slack)
    basis = []
    art_cols = []
    T = np.zeros((m + 1, n_struct + m + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    for r in range(m):
        if r < m_ub and sign[r] > 0:
            basis.append(n + r)
        else:
            col = n_struct + r
            T[r, col] = 1.0
            basis.append(col)
            art_cols.append(col)
    n_all = n_struct + m
    if art_cols:
        T[-1, art_cols] = 1.0
        for r in range(m):
            if basis[r] in art_cols:
                T[-1] -= T[r]
        it1 = _run(T, basis, n_all, max_iter)
        if -T[-1, -1] > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
            raise LPInfeasible("no feasible point")
        # drive remaining artificials out of the basis
        for r in range(m):
            if basis[r] >= n_struct:
                nz = np.flatnonzero(np.abs(T[r, :n_struct]) > PIVOT_TOL)
                if len(nz):
                    _pivot(T, r, int(nz[0]))
                    basis[r] = int(nz[0])
    else:
        it1 = 0
    # phase 2 objective row: reduced costs of c. Only structural columns may
    # enter; an artificial left basic sits on a redundant row at value zero.
    cost = np.zeros(n_all + 1)
    cost[:n] = c
    T[-1] = cost
    for r in range(m):
        if T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    it2 = _run(T, basis, n_struct, max_iter)

    x_full = np.zeros(n_all)
    for r in range(m):
        x_full[basis[r]] = T[r, -1]
    x = x_full[:n]
    # duals from the basis: y = c_B B^{-1}, computed directly for robustness
    A_full = np.hstack([A, np.eye(m)])
    c_full = np.concatenate([c, np.zeros(m_ub + m)])
    B = A_full[:, basis]
    try:
        y = np.linalg.solve(B.T, c_full[basis])
    except np.linalg.LinAlgError:
        y = np.linalg.lstsq(B.T, c_full[basis], rcond=None)[0]
    y = y * sign
    return LPResult(x=x, objective=float(c @ x), dual_ub=y[:m_ub], dual_eq=y[m_ub:], iterations=it1 + it2)


def linear_feasible_point(A_eq, b_eq, A_ge, b_ge) -> Optional[np.ndarray]:
    """A point ``p >= 0`` with ``A_eq p = b_eq`` and ``A_ge p >= b_ge``, or None."""
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    n = A_eq.shape[1] if A_eq.size else np.atleast_2d(A_ge).shape[1]
    A_ge = np.zeros((0, n)) if A_ge is None or np.size(A_ge) == 0 else np.atleast_2d(A_ge)
    b_ge = np.zeros(0) if b_ge is None or np.size(b_ge) == 0 else np.atleast_1d(b_ge)
    try:
        res = linprog(np.zeros(n), A_ub=-A_ge, b_ub=-b_ge, A_eq=A_eq, b_eq=b_eq)
    except LPInfeasible:
        return None
    return res.x
