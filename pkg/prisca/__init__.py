"""Bayesian detection of variance change points with credible sets."""
from .core.model_core import (
    SingleEffectPosterior, TimeSeries, expected_tau2, log_marginal_likelihood, multi_obs_posterior,
    single_effect_posterior
)
from .core.PriscaEngine import PriscaEngine, PriscaFit, auto_fit, elbo, fit, residuals
from .core.summaries import (
    ChangePointReport, CredibleSet, credible_set, dedup_overlaps, detect, map_estimate, variance_profile
)
from .helpers.config import ModelConfig
from .helpers.enums import SweepOrder

__all__ = [
    "ChangePointReport", "CredibleSet", "ModelConfig", "PriscaEngine", "PriscaFit", "SingleEffectPosterior",
    "SweepOrder", "TimeSeries", "auto_fit", "credible_set", "dedup_overlaps", "detect", "elbo", "expected_tau2",
    "fit", "log_marginal_likelihood", "map_estimate", "multi_obs_posterior", "residuals",
    "single_effect_posterior", "variance_profile",
]
