"""Worst-case expectations over a likelihood set, step by step.

Run with ``python3 demos/01_worst_case_basics.py``.
"""
import numpy as np

from lro import LikelihoodSet, ObservationSet, max_log_likelihood, select_gamma, worst_case_expectation
from lro.calibration import dirichlet_coverage

# %% Three outcomes seen 2, 1 and 1 times; the payoff of each outcome is h.
obs = ObservationSet([0.0, 1.0, 2.0], [2, 1, 1])
h = np.array([1.0, 2.0, 4.0])
print("empirical distribution:", obs.mle())
print("empirical expectation :", obs.mle() @ h)

# %% Tightest set: only the empirical distribution has the maximal log-likelihood.
mll = max_log_likelihood(obs)
print("max log-likelihood    :", round(mll, 6))
print("worst case at the max :", worst_case_expectation(LikelihoodSet(obs, mll), h).value)

# %% Loosening the threshold lets the adversary shift mass towards the cheap outcome.
for drop in (0.5, 1.0, 2.0, 5.0, 20.0):
    sol = worst_case_expectation(LikelihoodSet(obs, mll - drop), h)
    print(f"gamma = maxLL - {drop:>4}: value {sol.value:.4f}  p* = {np.round(sol.distribution, 4)}")

# %% The worst case has a closed form given the two multipliers.
sol = worst_case_expectation(LikelihoodSet(obs, mll - 2.0), h)
print("lambda, mu            :", sol.lambda_, sol.mu)
print("lambda N / (h - mu)   :", sol.lambda_ * obs.counts / (h - sol.mu))

# %% A calibrated threshold, and how often the Dirichlet posterior lands inside the set.
big = ObservationSet([0.0, 1.0, 2.0], [200, 100, 100])
choice = select_gamma(big, alpha=0.05)
print("calibrated gamma      :", round(choice.gamma, 4), "with", choice.dof, "dof")
print("posterior coverage    :", dirichlet_coverage(big, choice.gamma, samples=20_000, seed=1))
