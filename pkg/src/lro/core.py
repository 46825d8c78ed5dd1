"""Domain types shared by the solvers.

An :class:`ObservationSet` holds a finite support with occurrence counts, a
:class:`LikelihoodSet` adds the log-likelihood threshold (and optional linear
side constraints) that define the distribution family

    {p in simplex : sum_i N_i log p_i >= gamma, A_eq p = b_eq, A_ge p >= b_ge}.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

# absolute tolerances used across the package
PROB_TOL = 1e-8
LIKELIHOOD_TOL = 1e-6


class LROError(Exception):
    """Base class for solver errors."""


class EmptySet(LROError):
    """The distribution set has no member.

    ``margin`` is the amount by which the threshold (or constraint) is violated.
    """

    def __init__(self, message: str, margin: float = float("nan")):
        super().__init__(message)
        self.margin = margin


class NumericalFailure(LROError):
    """An iterative search failed to converge or to bracket a root."""


class IntervalEmpty(LROError, ValueError):
    pass


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ObservationSet:
    """Scenario support ``xi_1..xi_n`` together with occurrence counts.

    Scalar supports are stored as a 1-d array, vector supports as an
    ``(n, d)`` array. Zero counts are allowed: such points stay in the support
    but carry no likelihood term.
    """

    support: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        support = np.array(self.support, dtype=float)
        counts = np.asarray(self.counts)
        if support.ndim not in (1, 2):
            raise ValueError("support must be a 1-d or 2-d array")
        if counts.ndim != 1 or len(counts) != len(support):
            raise ValueError("counts length must equal support length")
        if len(support) == 0:
            raise ValueError("support is empty")
        if not np.all(np.isfinite(support)):
            raise ValueError("support values must be finite")
        if np.any(counts < 0) or np.any(np.asarray(counts, dtype=float) % 1 != 0):
            raise ValueError("counts must be nonnegative integers")
        counts = counts.astype(np.int64)
        if counts.sum() < 1:
            raise ValueError("at least one count must be positive")
        rows = support.reshape(len(support), -1)
        if len(np.unique(rows, axis=0)) != len(rows):
            raise ValueError("support values must be distinct")
        object.__setattr__(self, "support", _freeze(support))
        object.__setattr__(self, "counts", _freeze(counts))

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def observed(self) -> np.ndarray:
        """Boolean mask of support points with a positive count."""
        return self.counts > 0

    def mle(self) -> np.ndarray:
        return self.counts / self.total

    @classmethod
    def from_samples(cls, samples, support=None) -> "ObservationSet":
        """Tally raw samples. If ``support`` is given every sample must be in it."""
        samples = np.asarray(samples, dtype=float)
        if support is None:
            if samples.ndim == 1:
                values, counts = np.unique(samples, return_counts=True)
            else:
                values, counts = np.unique(samples, axis=0, return_counts=True)
            return cls(values, counts)
        support = np.asarray(support, dtype=float)
        lookup = {tuple(np.atleast_1d(s)): i for i, s in enumerate(support)}
        counts = np.zeros(len(support), dtype=np.int64)
        for s in samples:
            key = tuple(np.atleast_1d(s))
            if key not in lookup:
                raise ValueError(f"sample {s!r} is not in the declared support")
            counts[lookup[key]] += 1
        return cls(support, counts)

    # CSV: header ``value,count`` (scalar) or ``v1,...,vd,count`` (vector)
    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.support.ndim == 1:
            writer.writerow(["value", "count"])
            for v, c in zip(self.support, self.counts):
                writer.writerow([repr(float(v)), int(c)])
        else:
            d = self.support.shape[1]
            writer.writerow([f"v{j + 1}" for j in range(d)] + ["count"])
            for row, c in zip(self.support, self.counts):
                writer.writerow([repr(float(v)) for v in row] + [int(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ObservationSet":
        reader = csv.reader(io.StringIO(text))
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError("empty CSV") from None
        if not header or header[-1] != "count":
            raise ValueError("last CSV column must be 'count'")
        if header[:-1] != ["value"] and header[:-1] != [f"v{j + 1}" for j in range(len(header) - 1)]:
            raise ValueError(f"unrecognised CSV header {header!r}")
        values, counts = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields")
            try:
                values.append([float(c) for c in row[:-1]])
                count = float(row[-1])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if count != int(count):
                raise ValueError(f"line {lineno}: count must be an integer")
            counts.append(int(count))
        support = np.array(values, dtype=float)
        if header[:-1] == ["value"]:
            support = support[:, 0]
        return cls(support, np.array(counts, dtype=np.int64))


def max_log_likelihood(obs: ObservationSet) -> float:
    """Log-likelihood of the data at the MLE, ``sum N_i log(N_i/N)``."""
    c = obs.counts[obs.counts > 0].astype(float)
    return float(np.sum(c * np.log(c / obs.total)))


def log_likelihood(obs: ObservationSet, p) -> float:
    """``sum_{N_i > 0} N_i log p_i``; -inf when an observed point has zero mass."""
    p = np.asarray(p, dtype=float)
    mask = obs.observed
    with np.errstate(divide="ignore"):
        return float(np.sum(obs.counts[mask] * np.log(p[mask])))


@dataclass(frozen=True)
class SideConstraints:
    """Linear constraints ``A_eq p = b_eq`` and ``A_ge p >= b_ge``.

    The simplex row ``sum p = 1`` is always implied and need not be listed.
    """

    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ge: Optional[np.ndarray] = None
    b_ge: Optional[np.ndarray] = None

    def __post_init__(self):
        for A_name, b_name in (("A_eq", "b_eq"), ("A_ge", "b_ge")):
            A, b = getattr(self, A_name), getattr(self, b_name)
            if (A is None) != (b is None):
                raise ValueError(f"{A_name} and {b_name} must be given together")
            if A is None:
                continue
            A = np.atleast_2d(np.array(A, dtype=float))
            b = np.atleast_1d(np.array(b, dtype=float))
            if A.shape[0] != b.shape[0]:
                raise ValueError(f"{A_name} rows must match {b_name} length")
            object.__setattr__(self, A_name, _freeze(A))
            object.__setattr__(self, b_name, _freeze(b))

    def stacked(self, n: int):
        """Return ``(A, b, n_eq)`` with the simplex row first; rows ``< n_eq`` are equalities."""
        rows, rhs = [np.ones((1, n))], [np.ones(1)]
        if self.A_eq is not None:
            rows.append(self.A_eq)
            rhs.append(self.b_eq)
        n_eq = sum(r.shape[0] for r in rows)
        if self.A_ge is not None:
            rows.append(self.A_ge)
            rhs.append(self.b_ge)
        A = np.vstack(rows)
        if A.shape[1] != n:
            raise ValueError("side constraint width must equal support size")
        return A, np.concatenate(rhs), n_eq

    def residual(self, p) -> float:
        """Largest violation of the constraints at ``p`` (0 when satisfied)."""
        p = np.asarray(p, dtype=float)
        r = 0.0
        if self.A_eq is not None:
            r = max(r, float(np.max(np.abs(self.A_eq @ p - self.b_eq))))
        if self.A_ge is not None:
            r = max(r, float(np.max(np.maximum(self.b_ge - self.A_ge @ p, 0.0))))
        return r


def moment_constraints(values, mean: float, second_moment: Optional[float] = None) -> SideConstraints:
    """Pin the mean (and optionally the raw second moment) of a scalar support."""
    values = np.asarray(values, dtype=float)
    rows, rhs = [values], [mean]
    if second_moment is not None:
        rows.append(values**2)
        rhs.append(second_moment)
    return SideConstraints(A_eq=np.vstack(rows), b_eq=np.array(rhs))


@dataclass(frozen=True)
class LikelihoodSet:
    observations: ObservationSet
    gamma: float
    side_constraints: Optional[SideConstraints] = None

    def __post_init__(self):
        if not math.isfinite(self.gamma) and self.gamma != -math.inf:
            raise ValueError("gamma must be finite")

    def contains(self, p, tol: float = LIKELIHOOD_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        if np.any(p < -PROB_TOL) or abs(p.sum() - 1.0) > PROB_TOL:
            return False
        if log_likelihood(self.observations, p) < self.gamma - tol:
            return False
        if self.side_constraints is not None and self.side_constraints.residual(p) > tol:
            return False
        return True


@dataclass(frozen=True)
class WorstCaseSolution:
    """Result of an inner solve.

    ``lambda_`` and ``mu`` are the dual multipliers of the likelihood and
    normalisation (or stacked linear) constraints; the worst case has the form
    ``p_i = lambda_ * N_i / (h_i - a_i . mu)`` on observed points.
    ``lambda_`` is ``inf`` when gamma equals the maximum log-likelihood (the set
    is the single MLE point and the multiplier is unbounded).
    """

    value: float
    distribution: np.ndarray
    lambda_: float
    mu: Union[float, np.ndarray]
    kkt_residual: float
    dual_value: float = float("nan")
    # h_i - a_i . mu as the solver holds it; more accurate than recomputing from mu near a vertex
    dual_slack: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FeasibilityReport:
    nonempty: bool
    margin: float
    reason: str = ""

    def raise_if_empty(self):
        if not self.nonempty:
            raise EmptySet(self.reason, self.margin)


def validate_likelihood_set(lset: LikelihoodSet) -> FeasibilityReport:
    """Check that the threshold is attainable and that the side constraints admit a distribution.

    ``margin`` is ``gamma - max_log_likelihood`` (negative or zero when feasible).
    Joint infeasibility of the likelihood and side constraints (when each is
    satisfiable alone) is detected later by the constrained solver.
    """
    obs = lset.observations
    mll = max_log_likelihood(obs)
    margin = lset.gamma - mll
    if margin > LIKELIHOOD_TOL * 1e-3 * (1.0 + abs(mll)):
        return FeasibilityReport(False, margin, f"gamma exceeds the maximum log-likelihood by {margin:.6g}")
    sc = lset.side_constraints
    if sc is None:
        return FeasibilityReport(True, margin)
    if sc.residual(obs.mle()) <= PROB_TOL:
        return FeasibilityReport(True, margin)
    # phase-1 feasibility of the linear system over the simplex
    from .lp import linear_feasible_point

    A, b, n_eq = sc.stacked(obs.n)
    point = linear_feasible_point(A[:n_eq], b[:n_eq], A[n_eq:], b[n_eq:])
    if point is None:
        return FeasibilityReport(False, float("inf"), "side constraints admit no distribution on the support")
    return FeasibilityReport(True, margin)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    integer: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise IntervalEmpty(f"interval [{self.lo}, {self.hi}] is empty")


@dataclass(frozen=True)
class Simplex:
    dim: int


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray


FeasibleSet = Union[Interval, Simplex, Box]


@dataclass(frozen=True)
class DecisionProblem:
    """A maximise-the-worst-case decision problem.

    ``objective(x, support)`` returns the payoff vector ``h(x, xi_i)`` aligned
    with the support. ``supergradient(x, support)`` (needed for vector
    decisions) returns the ``(n, d)`` matrix of per-scenario (super)gradients in x.
    """

    objective: Callable[[object, np.ndarray], np.ndarray]
    feasible_set: FeasibleSet
    concave: bool = True
    supergradient: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = ""

    def payoff(self, x, support) -> np.ndarray:
        h = np.asarray(self.objective(x, support), dtype=float)
        if h.shape != (len(support),):
            raise ValueError("objective must return one payoff per support point")
        if not np.all(np.isfinite(h)):
            raise ValueError("objective returned a non-finite payoff")
        return h
