"""Visual predictive checks for time-to-event models whose simulations must
stop at each subject's observed end of follow-up, corrected by inverse
probability of censoring weighting."""

from .coxph import CoxModel, cond_survival, cox_fit, marginal_survival
from .estimators import KmCurve, censoring_fit, km_fit, weighted_km_fit
from .records import Study, StudyRecord
from .studygen import default_spec, generate_study, true_marginal_survival
from .survmodel import INFINITE, ExponentialDist, StepSurvival, WeibullDist
from .vpc import Algorithm, VpcConfig, WeightForm, build_marginal, run_vpc

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "Algorithm",
    "CoxModel",
    "ExponentialDist",
    "KmCurve",
    "StepSurvival",
    "Study",
    "StudyRecord",
    "VpcConfig",
    "WeibullDist",
    "WeightForm",
    "build_marginal",
    "censoring_fit",
    "cond_survival",
    "cox_fit",
    "default_spec",
    "generate_study",
    "km_fit",
    "marginal_survival",
    "run_vpc",
    "true_marginal_survival",
    "weighted_km_fit",
]
