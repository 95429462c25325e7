import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from opentelemetry import metrics, trace
from scipy.special import gammaln, digamma, xlogy

from ..helpers.config import ModelConfig
from ..helpers.constants import DIVISION_FLOOR, TABLE_L_DIVISOR
from ..helpers.enums import LRule, SweepOrder
from ..helpers.errors import InvalidInputError
from .model_core import (
    SingleEffectPosterior, TimeSeries, expected_log_tau2, expected_tau2,
    posterior_from_statistics
)
from .summaries import detect

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)
meter = metrics.get_meter(__name__)

counter_fits = meter.create_counter(
    name="prisca_fits_total",
    unit="1",
    description="The number of PRISCA fits run",
)
counter_not_converged = meter.create_counter(
    name="prisca_fits_not_converged_total",
    unit="1",
    description="The number of PRISCA fits that hit the iteration cap",
)


@dataclass(frozen=True)
class PriscaFit:
    """
    Result of fitting a product of L single scale effects.

    Attributes:
        effects: One posterior per effect
        tau2_bar: L x T expected squared scales, row l from effects[l]
        elbo_trace: ELBO after every completed sweep
        converged: Whether the ELBO change fell below epsilon
        iterations: Number of sweeps run
        config: Configuration the fit was run with (L included)
        capped: auto_fit stopped at its L cap rather than by the k_hat rule
        auto_path: k_hat for every L tried by auto_fit
    """
    effects: Tuple[SingleEffectPosterior, ...]
    tau2_bar: np.ndarray
    elbo_trace: np.ndarray
    converged: bool
    iterations: int
    config: ModelConfig
    capped: bool = False
    auto_path: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def L(self) -> int:
        return len(self.effects)

    @property
    def T(self) -> int:
        return int(self.tau2_bar.shape[1])

    @property
    def alpha(self) -> np.ndarray:
        """L x T matrix of change probabilities."""
        return np.vstack([e.alpha for e in self.effects])

    @property
    def elbo(self) -> float:
        return float(self.elbo_trace[-1])


def _check_rows(tau2_bar: np.ndarray) -> np.ndarray:
    tau2_bar = np.atleast_2d(np.asarray(tau2_bar, dtype=float))
    if np.any(~np.isfinite(tau2_bar)) or np.any(tau2_bar <= 0):
        raise InvalidInputError("expected squared scales must be finite and positive")
    return tau2_bar


def _product_except(tau2_bar: np.ndarray, l: int, running: Optional[np.ndarray] = None) -> np.ndarray:
    if tau2_bar.shape[0] == 1:
        return np.ones(tau2_bar.shape[1])
    if running is not None and tau2_bar[l].min() >= DIVISION_FLOOR:
        return running / tau2_bar[l]
    return np.prod(np.delete(tau2_bar, l, axis=0), axis=0)


def residuals(y: TimeSeries, tau2_bar: np.ndarray, l: int) -> np.ndarray:
    """
    Squared residuals seen by effect l.

    Args:
        y: Observed series
        tau2_bar: L x T expected squared scales
        l: 0-based effect index

    Returns:
        Per-instant sums of squares scaled by every other effect
    """
    tau2_bar = _check_rows(tau2_bar)
    if not 0 <= l < tau2_bar.shape[0]:
        raise InvalidInputError(f"effect index {l} outside 0..{tau2_bar.shape[0] - 1}")
    if tau2_bar.shape[1] != y.T:
        raise InvalidInputError("expected squared scales do not match the series length")
    running = np.prod(tau2_bar, axis=0)
    return y.sum_squares * _product_except(tau2_bar, l, running)


def _gamma_kl(a: np.ndarray, b: np.ndarray, a0: float) -> np.ndarray:
    # KL(Gamma(a, b) || Gamma(a0, a0)), shape-rate parameterisation
    return (
        (a - a0) * digamma(a) - gammaln(a) + gammaln(a0)
        + a0 * (np.log(b) - np.log(a0)) + a * (a0 - b) / b
    )


def _elbo(effects: Sequence[SingleEffectPosterior],
          tau2_bar: np.ndarray,
          sum_squares: np.ndarray,
          counts: np.ndarray,
          prior: np.ndarray,
          config: ModelConfig,
          include_constant: bool) -> float:
    log_det = 0.0
    kl = 0.0
    for post in effects:
        log_det += float(counts @ expected_log_tau2(post))
        kl += float(np.sum(
            xlogy(post.alpha, post.alpha) - post.alpha * np.log(prior)
            + post.alpha * _gamma_kl(post.a, post.b, config.a0)
        ))
    fit_term = float(np.sum(sum_squares * np.prod(tau2_bar, axis=0))) / (2 * config.sigma2)
    value = 0.5 * log_det - fit_term - kl
    if include_constant:
        value -= counts.sum() / 2 * math.log(2 * math.pi * config.sigma2)
    return value


def elbo(effects: Sequence[SingleEffectPosterior],
         y: TimeSeries,
         config: ModelConfig,
         include_constant: bool = False) -> float:
    """
    Evidence lower bound of the mean-field approximation.

    Args:
        effects: One posterior per effect
        y: Observed series
        config: Model configuration
        include_constant: Add -(N/2) log(2 pi sigma2) to give the full bound

    Returns:
        ELBO value
    """
    if len(effects) == 0:
        raise InvalidInputError("ELBO needs at least one effect")
    tau2_bar = np.vstack([expected_tau2(e) for e in effects])
    prior = config.prior_weights(y.T)
    return _elbo(effects, tau2_bar, y.sum_squares, y.n, prior, config, include_constant)


def default_L(T: int, rule: LRule = LRule.TABLE) -> int:
    """
    Default number of effects for a series of length T.

    TABLE gives floor(T/30); SPACING gives ceil(T / floor(sqrt(T log T))),
    the number of changes that fit at the localization-rate spacing.
    """
    if rule == LRule.TABLE:
        return max(1, T // TABLE_L_DIVISOR)
    spacing = max(1, math.floor(math.sqrt(T * math.log(T)))) if T > 1 else 1
    return max(1, math.ceil(T / spacing))


class PriscaEngine:
    """Fits PRISCA by coordinate ascent over its single effects."""

    def __init__(self, config: ModelConfig, order: SweepOrder = SweepOrder.FORWARD):
        """
        Initialize the engine.

        Args:
            config: Model configuration; config.L is the number of effects
            order: Order in which effects are updated within a sweep
        """
        self.config = config
        self.order = order

    def fit(self, y: TimeSeries) -> PriscaFit:
        """
        Fit L effects by backfitting until the ELBO stabilises.

        Args:
            y: Observed series

        Returns:
            PriscaFit; converged is False if max_iter sweeps were not enough
        """
        with tracer.start_as_current_span("prisca_fit") as span:
            config = self.config
            L, T = config.L, y.T
            span.set_attribute("series_length", T)
            span.set_attribute("effects", L)

            sum_squares, counts = y.sum_squares, y.n
            prior = config.prior_weights(T)
            sweep = range(L) if self.order == SweepOrder.FORWARD else range(L - 1, -1, -1)
            tau2_bar = np.ones((L, T))
            effects: List[Optional[SingleEffectPosterior]] = [None] * L
            trace_values: List[float] = []
            converged = False

            try:
                for _ in range(config.max_iter):
                    running = np.prod(tau2_bar, axis=0)
                    for l in sweep:
                        others = _product_except(tau2_bar, l, running)
                        post = posterior_from_statistics(sum_squares * others, counts, config)
                        tau2_bar[l] = expected_tau2(post)
                        running = others * tau2_bar[l]
                        effects[l] = post
                    trace_values.append(_elbo(effects, tau2_bar, sum_squares, counts, prior, config, False))
                    if len(trace_values) > 1 and abs(trace_values[-1] - trace_values[-2]) < config.epsilon:
                        converged = True
                        break
            except Exception as e:
                span.record_exception(e)
                logger.error("PRISCA fit failed (T=%d, L=%d): %s", T, L, e)
                raise

            counter_fits.add(1)
            if not converged:
                counter_not_converged.add(1)
                logger.warning("PRISCA fit did not converge in %d sweeps (T=%d, L=%d)",
                               config.max_iter, T, L)
            span.set_attribute("iterations", len(trace_values))
            span.set_attribute("converged", converged)

            tau2_bar.setflags(write=False)
            elbo_trace = np.asarray(trace_values)
            elbo_trace.setflags(write=False)
            return PriscaFit(
                effects=tuple(effects),
                tau2_bar=tau2_bar,
                elbo_trace=elbo_trace,
                converged=converged,
                iterations=len(trace_values),
                config=config,
            )

    def auto_fit(self, y: TimeSeries) -> PriscaFit:
        """
        Choose L by increasing it from one until k_hat stops rising.

        config.L is ignored. The search stops at ceil(T / floor(sqrt(T log T)))
        effects; a fit returned there has capped set.

        Args:
            y: Observed series

        Returns:
            The fit at the selected L, with the k_hat path attached
        """
        with tracer.start_as_current_span("prisca_auto_fit") as span:
            cap = default_L(y.T, LRule.SPACING)
            span.set_attribute("series_length", y.T)
            span.set_attribute("max_effects", cap)

            path: List[int] = []
            result: Optional[PriscaFit] = None
            for L in range(1, cap + 1):
                result = PriscaEngine(self.config.model_copy(update={"L": L}), self.order).fit(y)
                path.append(detect(result).k_hat)
                if len(path) > 1 and path[-1] == path[-2]:
                    span.set_attribute("effects", L)
                    return _with_path(result, path, capped=False)

            logger.info("auto-PRISCA reached its cap of %d effects", cap)
            span.set_attribute("effects", cap)
            return _with_path(result, path, capped=True)


def _with_path(result: PriscaFit, path: List[int], capped: bool) -> PriscaFit:
    return PriscaFit(
        effects=result.effects,
        tau2_bar=result.tau2_bar,
        elbo_trace=result.elbo_trace,
        converged=result.converged,
        iterations=result.iterations,
        config=result.config,
        capped=capped,
        auto_path=tuple(path),
    )


def fit(y: TimeSeries, config: ModelConfig) -> PriscaFit:
    """Fit PRISCA with config.L effects."""
    return PriscaEngine(config).fit(y)


def auto_fit(y: TimeSeries, config: ModelConfig) -> PriscaFit:
    """Fit auto-PRISCA, ignoring config.L."""
    return PriscaEngine(config).auto_fit(y)
