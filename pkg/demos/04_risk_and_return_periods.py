"""Extreme-year flags, survival probabilities and return periods.

Run with ``python3 demos/04_risk_and_return_periods.py``.
"""
import numpy as np

from vinerisk.risk import (RiskSurface, flag_extreme_year, return_period, return_period_map,
                           survival_series)

# %% A year is flagged when the 0.95 quantile of its cell probabilities exceeds 0.2.
cells = np.arange(100)
quiet = np.r_[np.zeros(96), np.full(4, 0.9)]
severe = np.r_[np.zeros(94), np.full(6, 0.25)]
print("4% of cells at 0.9 flagged:", flag_extreme_year(RiskSurface(2001, cells, quiet, "joint")))
print("6% of cells at 0.25 flagged:", flag_extreme_year(RiskSurface(2002, cells, severe, "joint")))

# %% Survival is one minus the accumulated yearly probabilities.
rng = np.random.default_rng(4)
probs = rng.uniform(0.0, 0.15, (12, 5))
surfaces = [RiskSurface(2000 + t, cells[:5], probs[t], "frost") for t in range(12)]
ss = survival_series(surfaces, 0, 2000, 2011)
print("cell 0 survival from 2000:", np.round(ss.values, 3))

# %% The return period interpolates the year in which survival first reaches one half.
print("cell 0 return period:", return_period(surfaces, 0, 2000))
print(return_period_map(surfaces, 2000).to_frame())
