import math
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from prisca.core.model_core import TimeSeries
from prisca.helpers.config import ModelConfig


@pytest.fixture
def config():
    return ModelConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def write_series(tmp_path):
    """Write text to a file under tmp_path and return its path."""

    def _write(text: str, name: str = "series.csv") -> Path:
        path = tmp_path / name
        path.write_bytes(text.encode("utf-8"))
        return path

    return _write


def change_series(rng, T: int, t0: int, ratio: float, sigma2: float = 1.0) -> TimeSeries:
    """Zero-mean Gaussian series whose variance is multiplied by ratio from instant t0 (1-based)."""
    scale = np.where(np.arange(1, T + 1) >= t0, math.sqrt(ratio * sigma2), math.sqrt(sigma2))
    return TimeSeries(rng.standard_normal(T) * scale)


def quadrature_log_marginal(samples, t: int, config: ModelConfig) -> float:
    """
    log P(y | change at t) by numerical integration over s^2.

    samples is a ragged list of per-instant observations; the Gamma(a0, a0)
    scale is integrated on the log scale around its mode.
    """
    a0, sigma2 = config.a0, config.sigma2
    left = np.concatenate([np.asarray(s, dtype=float) for s in samples[:t - 1]] or [np.empty(0)])
    right = np.concatenate([np.asarray(s, dtype=float) for s in samples[t - 1:]])
    n, S = right.size, float(right @ right)

    log_left = -left.size / 2 * math.log(2 * math.pi * sigma2) - float(left @ left) / (2 * sigma2)

    def g(u):
        x = math.exp(u)
        return (n / 2 + a0) * u - x * (S / (2 * sigma2) + a0)

    mode = math.log((n / 2 + a0) / (S / (2 * sigma2) + a0))
    peak = g(mode)

    def density(u):
        # the rate is at least a0, so past exp(700) the integrand is zero in double precision
        if u > 700:
            return 0.0
        return math.exp(g(u) - peak)

    lower, _ = quad(density, -math.inf, mode, epsabs=0, epsrel=1e-13, limit=200)
    upper, _ = quad(density, mode, math.inf, epsabs=0, epsrel=1e-13, limit=200)
    constant = a0 * math.log(a0) - math.lgamma(a0) - n / 2 * math.log(2 * math.pi * sigma2)
    return log_left + constant + peak + math.log(lower + upper)


def quadrature_alpha(samples, config: ModelConfig) -> np.ndarray:
    log_m = np.array([quadrature_log_marginal(samples, t, config) for t in range(1, len(samples) + 1)])
    log_w = log_m + np.log(config.prior_weights(len(samples)))
    w = np.exp(log_w - log_w.max())
    return w / w.sum()
