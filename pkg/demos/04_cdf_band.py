"""Continuous demand: a Kolmogorov-Smirnov band and the band-robust newsvendor.

Run with ``python3 demos/04_cdf_band.py``.
"""
import numpy as np

from lro import band_worst_case, ks_band, ks_critical_value
from lro.apps import newsvendor_band

rng = np.random.default_rng(3)
x = np.sort(rng.uniform(20, 80, 40))
band = ks_band(x, alpha=0.1)
print("band half-width D:", round(ks_critical_value(len(x), 0.1), 4))

# %% The worst case of a fixed stock level puts interval masses at the costlier knot.
b, h = 2.0, 1.0
sol = band_worst_case(band, lambda xi: -(b * np.maximum(xi - 55, 0) + h * np.maximum(55 - xi, 0)), (0.0, 100.0))
print("worst-case cost at stock 55:", round(-sol.value, 3), " intervals with mass:", sol.active_knots)

# %% Optimise the stock level over [0, 100].
res = newsvendor_band(band, (0.0, 100.0), b, h)
print("band-robust stock:", round(res.decision, 3), " worst-case cost:", round(res.value, 3))
print("empirical 2/3 quantile for comparison:", round(float(np.quantile(x, b / (b + h))), 3))
