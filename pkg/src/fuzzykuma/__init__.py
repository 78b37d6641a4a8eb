"""Kumaraswamy parameter estimation from fuzzy observations."""

__version__ = "0.1.0"

from .kuma import KumaParams, cdf, pdf, quantile, sample
from .fuzzy import (
    FuzzyInformationSystem,
    FuzzyObservation,
    FuzzySample,
    MembershipFunction,
    default_fis,
    fuzzify,
)
from .likelihood import LikelihoodForm, obs_loglik
from .mle import FitOptions, asymptotic_ci, fit_em, fit_newton_raphson
from .bayes import PriorPair, GammaPrior, McmcOptions, mh_sample, tierney_kadane, hpd_interval, posterior_mean
from .sim import StudyConfig, run_study

__all__ = [
    "KumaParams", "cdf", "pdf", "quantile", "sample",
    "FuzzyInformationSystem", "FuzzyObservation", "FuzzySample", "MembershipFunction", "default_fis", "fuzzify",
    "LikelihoodForm", "obs_loglik",
    "FitOptions", "asymptotic_ci", "fit_em", "fit_newton_raphson",
    "PriorPair", "GammaPrior", "McmcOptions", "mh_sample", "tierney_kadane", "hpd_interval", "posterior_mean",
    "StudyConfig", "run_study",
]
