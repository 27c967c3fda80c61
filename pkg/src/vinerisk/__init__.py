"""Vine-copula regression for conditional compound-event risk on gridded data."""
from .copula import (ALL_FAMILIES, FamilyId, PairCopula, cop_cdf, cop_logpdf, cop_pdf, fit_mle,
                     hfunc, hinv, param_to_tau, select_family, simulate_pair, tau_to_param)
from .dependence import kendall_tau, tau_matrix, tau_series
from .dvine import DVineModel, cond_cdf, cond_density, cond_quantile, fit_dvine, simulate_dvine
from .marginals import KernelMarginal, cdf_eval, fit_kde, pit_transform, quantile_eval
from .risk import (ReturnPeriodMap, RiskSurface, SurvivalSeries, ThresholdPair, flag_extreme_year,
                   joint_risk, return_period, survival, univariate_risk)
from .yvine import (BivariateEval, YVineModel, bivariate_cond_cdf, cond_cdf_v1_given_v2,
                    cond_density_v1_given_v2, cond_density_v2, conditional_tau, fit_yvine,
                    simulate_yvine)

__version__ = "0.1.0"

__all__ = [
    "ALL_FAMILIES", "FamilyId", "PairCopula", "cop_cdf", "cop_logpdf", "cop_pdf", "fit_mle",
    "hfunc", "hinv", "param_to_tau", "select_family", "simulate_pair", "tau_to_param",
    "kendall_tau", "tau_matrix", "tau_series",
    "DVineModel", "cond_cdf", "cond_density", "cond_quantile", "fit_dvine", "simulate_dvine",
    "KernelMarginal", "cdf_eval", "fit_kde", "pit_transform", "quantile_eval",
    "ReturnPeriodMap", "RiskSurface", "SurvivalSeries", "ThresholdPair", "flag_extreme_year",
    "joint_risk", "return_period", "survival", "univariate_risk",
    "BivariateEval", "YVineModel", "bivariate_cond_cdf", "cond_cdf_v1_given_v2",
    "cond_density_v1_given_v2", "cond_density_v2", "conditional_tau", "fit_yvine",
    "simulate_yvine",
]
