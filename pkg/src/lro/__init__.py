"""Likelihood robust optimization: worst-case expectations over empirical-likelihood sets."""
from .band import BandRobustSolution, CdfBand, EmptyBand, band_optimize_scalar, band_worst_case, ks_band, ks_critical_value
from .calibration import (
    EntropyCltStats,
    GammaChoice,
    ProfileLikelihoodInterval,
    chi_square_quantile,
    dirichlet_coverage,
    entropy_clt_stats,
    profile_log_likelihood,
    profile_mean_interval,
    select_gamma,
    user_gamma,
)
from .core import (
    Box,
    DecisionProblem,
    EmptySet,
    FeasibilityReport,
    Interval,
    IntervalEmpty,
    LikelihoodSet,
    LROError,
    NumericalFailure,
    ObservationSet,
    SideConstraints,
    Simplex,
    WorstCaseSolution,
    log_likelihood,
    max_log_likelihood,
    moment_constraints,
    validate_likelihood_set,
)
from .inner import worst_case_expectation, worst_case_expectation_constrained
from .outer import OuterResult, optimize_scalar, optimize_simplex

__version__ = "0.1.0"
