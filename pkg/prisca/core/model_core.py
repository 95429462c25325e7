"""
Closed-form posterior of the single variance-change model.

A sequence y_1..y_T is N(0, sigma2) up to an unknown instant and
N(0, sigma2 / s^2) from that instant on, with s^2 ~ Gamma(a0, a0) and a
categorical prior on the instant. Everything here is computed from two
per-instant statistics, the sum of squares and the number of replicates, so
the same kernel serves single observations, repeated observations and the
scaled residuals of every PRISCA effect.
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.special import digamma, gammaln, logsumexp

from ..helpers.config import ModelConfig
from ..helpers.errors import InvalidInputError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TimeSeries:
    """
    Ordered real observations, optionally with several samples per instant.

    ``values`` holds every sample in time order. When ``counts`` is given,
    instant t owns the next ``counts[t]`` samples of ``values``.
    """
    values: np.ndarray
    counts: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0:
            raise InvalidInputError("time series must contain at least one value")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InvalidInputError(f"non-finite value at position {bad + 1}")
        counts = None
        if self.counts is not None:
            counts = np.array(self.counts).ravel()
            if counts.size == 0:
                raise InvalidInputError("counts must not be empty")
            if not np.all(counts == np.round(counts)) or np.any(counts < 1):
                raise InvalidInputError("every replicate count must be a positive integer")
            counts = counts.astype(np.int64)
            if int(counts.sum()) != values.size:
                raise InvalidInputError(
                    f"counts add up to {int(counts.sum())} but {values.size} values were given"
                )
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "counts", _frozen(counts) if counts is not None else None)

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "TimeSeries":
        """Build a one-sample-per-instant series."""
        return cls(np.asarray(list(values), dtype=float))

    @classmethod
    def from_samples(cls, samples: Sequence[Sequence[float]]) -> "TimeSeries":
        """Build a series from a ragged list of per-instant samples."""
        if len(samples) == 0:
            raise InvalidInputError("time series must contain at least one instant")
        counts = [len(s) for s in samples]
        if min(counts) < 1:
            raise InvalidInputError("every instant needs at least one sample")
        flat = np.concatenate([np.asarray(s, dtype=float).ravel() for s in samples])
        return cls(flat, np.asarray(counts, dtype=np.int64))

    @property
    def T(self) -> int:
        return int(self.counts.size) if self.counts is not None else int(self.values.size)

    @property
    def has_replicates(self) -> bool:
        return self.counts is not None

    @property
    def n(self) -> np.ndarray:
        """Replicate counts, all ones for single observations."""
        if self.counts is None:
            return np.ones(self.T, dtype=np.int64)
        return self.counts

    @property
    def sum_squares(self) -> np.ndarray:
        """Per-instant sum of squared samples."""
        squares = self.values ** 2
        if self.counts is None:
            return squares
        starts = np.concatenate(([0], np.cumsum(self.counts)[:-1]))
        return np.add.reduceat(squares, starts)

    def samples(self) -> List[np.ndarray]:
        """Per-instant samples as a ragged list."""
        if self.counts is None:
            return [self.values[t:t + 1] for t in range(self.T)]
        return np.split(self.values, np.cumsum(self.counts)[:-1])


@dataclass(frozen=True)
class SingleEffectPosterior:
    """
    Posterior of the single-change model.

    Attributes:
        alpha: P(change at t | y), sums to one
        a: Gamma shape of s^2 given a change at t
        b: Gamma rate of s^2 given a change at t
        log_marginals: log P(y | change at t)
        suffix_counts: Number of samples at or after t
    """
    alpha: np.ndarray
    a: np.ndarray
    b: np.ndarray
    log_marginals: np.ndarray
    suffix_counts: np.ndarray

    @property
    def T(self) -> int:
        return int(self.alpha.size)

    @property
    def s_hat(self) -> np.ndarray:
        """Posterior expected precision scale a_t / b_t."""
        return self.a / self.b


def _suffix_sums(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x[::-1])[::-1]


def _check_statistics(sum_squares: np.ndarray, counts: np.ndarray) -> None:
    if sum_squares.ndim != 1 or sum_squares.size == 0:
        raise InvalidInputError("sum of squares must be a non-empty vector")
    if counts.shape != sum_squares.shape:
        raise InvalidInputError("counts and sums of squares must have the same length")
    if not np.all(np.isfinite(sum_squares)) or np.any(sum_squares < 0):
        raise InvalidInputError("sums of squares must be finite and nonnegative")


def _log_marginal_terms(sum_squares: np.ndarray, counts: np.ndarray, config: ModelConfig):
    suffix_n = _suffix_sums(counts)
    prefix_n = int(counts.sum()) - suffix_n
    suffix_ss = _suffix_sums(sum_squares)
    prefix_ss = np.concatenate(([0.0], np.cumsum(sum_squares)[:-1]))

    a = config.a0 + suffix_n / 2
    b = config.a0 + suffix_ss / (2 * config.sigma2)

    log_2pi_sigma2 = np.log(2 * np.pi * config.sigma2)
    # left of t: exact Gaussian density at the baseline variance
    left = -prefix_n / 2 * log_2pi_sigma2 - prefix_ss / (2 * config.sigma2)
    # from t on: Gaussian likelihood integrated against Gamma(a0, a0)
    right = (
        config.a0 * np.log(config.a0) - gammaln(config.a0)
        + gammaln(a) - a * np.log(b)
        - suffix_n / 2 * log_2pi_sigma2
    )
    return left + right, a, b, suffix_n


def posterior_from_statistics(sum_squares: np.ndarray,
                              counts: np.ndarray,
                              config: ModelConfig) -> SingleEffectPosterior:
    """
    Single-change posterior from per-instant sufficient statistics.

    Args:
        sum_squares: Per-instant sum of squared observations (or scaled residuals)
        counts: Per-instant number of samples
        config: Model configuration

    Returns:
        The exact posterior, computed in O(T)
    """
    sum_squares = np.asarray(sum_squares, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    _check_statistics(sum_squares, counts)

    log_m, a, b, suffix_n = _log_marginal_terms(sum_squares, counts, config)
    log_w = log_m + np.log(config.prior_weights(sum_squares.size))
    alpha = np.exp(log_w - logsumexp(log_w))
    alpha /= alpha.sum()

    return SingleEffectPosterior(
        alpha=_frozen(alpha),
        a=_frozen(a),
        b=_frozen(b),
        log_marginals=_frozen(log_m),
        suffix_counts=_frozen(suffix_n),
    )


def log_marginals(y: TimeSeries, config: ModelConfig) -> np.ndarray:
    """log P(y | change at t) for every t in one sweep."""
    log_m, _, _, _ = _log_marginal_terms(y.sum_squares, y.n, config)
    return log_m


def log_marginal_likelihood(y: TimeSeries, t: int, config: ModelConfig) -> float:
    """
    Log marginal likelihood of y given a change at instant t.

    Args:
        y: Observed series
        t: Change instant, 1-based
        config: Model configuration

    Returns:
        log P(y | change at t) with s^2 integrated out

    Raises:
        InvalidInputError: If t is outside 1..T
    """
    if not 1 <= t <= y.T:
        raise InvalidInputError(f"change index {t} outside 1..{y.T}")
    return float(log_marginals(y, config)[t - 1])


def single_effect_posterior(y: TimeSeries, config: ModelConfig) -> SingleEffectPosterior:
    """Exact posterior of the single-change model for y."""
    return posterior_from_statistics(y.sum_squares, y.n, config)


def multi_obs_posterior(y: TimeSeries, config: ModelConfig) -> SingleEffectPosterior:
    """
    Exact posterior when several samples are observed at each instant.

    Raises:
        InvalidInputError: If y carries no replicate counts
    """
    if not y.has_replicates:
        raise InvalidInputError("multi-observation posterior needs per-instant counts")
    return posterior_from_statistics(y.sum_squares, y.counts, config)


def expected_tau2(post: SingleEffectPosterior) -> np.ndarray:
    """
    Posterior expectation of the squared scale at every instant.

    Entry t mixes the models with a change at or before t (scale a_i/b_i)
    with the neutral model (scale 1).
    """
    cum_alpha = np.cumsum(post.alpha)
    mixed = np.cumsum(post.alpha * post.s_hat)
    return mixed + np.clip(1.0 - cum_alpha, 0.0, None)


def expected_log_tau2(post: SingleEffectPosterior) -> np.ndarray:
    """Posterior expectation of log tau_t^2; zero under the neutral model."""
    return np.cumsum(post.alpha * (digamma(post.a) - np.log(post.b)))
