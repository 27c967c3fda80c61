"""Y-vine: the joint conditional distribution of two responses.

Shows that the joint probability of both responses falling below a threshold
is not the product of the two conditional marginal probabilities when the
responses remain dependent given the predictors.

Run with ``python3 demos/03_yvine_joint_risk.py``.
"""

from vinerisk.yvine import (bivariate_cond_cdf, cond_cdf_v1, cond_cdf_v2, conditional_tau,
                            fit_yvine, simulate_yvine)
from vinerisk.pipeline import default_generating_model

# %% Draw from a known Y-vine with three predictors, then refit it.
truth = default_generating_model()
sim = simulate_yvine(truth, 4000, seed=3)
model = fit_yvine(sim["frost"], sim["drought"], {p: sim[p] for p in truth.order}, max_p=3,
                  response_names=("frost", "drought"))
print("order:", model.order, "| pair copulas:", len(model.pair_copulas))
fam, theta, tau = conditional_tau(model)
print(f"top copula {fam.token} theta={theta:.3f}: conditional tau {tau:.3f} "
      f"(truth {truth.top_copula.tau:.3f})")

# %% Joint versus product for a frost-and-drought event at several predictor settings.
v1, v2 = 0.2, 0.3
for u in ([0.2, 0.5, 0.5], [0.5, 0.5, 0.5], [0.8, 0.5, 0.5]):
    joint = float(bivariate_cond_cdf(model, v1, v2, u))
    prod = float(cond_cdf_v1(model, v1, u) * cond_cdf_v2(model, v2, u))
    print(f"u = {u}: joint {joint:.4f} vs product {prod:.4f} (ratio {joint / prod:.2f})")
