"""
Synthetic study and the Cox model under evaluation
==================================================

Generate the two-arm, two-risk-group study, look at its Kaplan-Meier curves
next to the true mixture survival, and fit the Cox model that the VPCs
will check.
"""

import numpy as np

from ipocvpc import cox_fit, default_spec, generate_study, km_fit, true_marginal_survival
from ipocvpc.estimators import censoring_fit
from ipocvpc.survmodel import WeibullDist

spec = default_spec()
study = generate_study(spec)
print(study)

###############################################################################
# Observed KM per arm against the data-generating mixture

grid = np.linspace(0, 2.5, 6)
for arm, flag in (("active", 0.0), ("placebo", 1.0)):
    sel = study.column("placebo") == flag
    km = km_fit(study.time[sel], study.event[sel])
    truth = true_marginal_survival(spec, arm, grid)
    print(f"{arm:8s} KM   ", np.round(km(grid), 3))
    print(f"{arm:8s} truth", np.round(truth, 3))

###############################################################################
# Cox model with treatment, risk group and their interaction.
# The reference cell is active treatment in the high-risk group.

model = cox_fit(study.time, study.event, study.covariates, study.covariate_names)
print("beta:", dict(zip(model.covariate_names, np.round(model.beta, 4))))
print("HR low vs high risk (active):     ", round(model.hazard_ratio([1, 0, 0], [0, 0, 0]), 4))
print("HR placebo vs active (high risk): ", round(model.hazard_ratio([0, 1, 0], [0, 0, 0]), 3))
print("HR placebo vs active (low risk):  ", round(model.hazard_ratio([1, 1, 1], [1, 0, 0]), 3))

###############################################################################
# The censoring model is the reverse Kaplan-Meier; compare with the Weibull truth

sc = censoring_fit(study.time, study.event)
print("censoring survival  ", np.round(sc.survival_at(grid), 3))
print("Weibull(2, 5) truth ", np.round(WeibullDist(2, 5).survival_at(grid), 3))
