import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import qr, solve_triangular

from ...helpers.config import ModelConfig
from ...helpers.constants import AR_MAX_OUTER_ITER, AR_TOLERANCE, RANK_TOLERANCE
from ...helpers.errors import InvalidInputError, SingularDesignError
from ..model_core import TimeSeries
from ..PriscaEngine import PriscaEngine, PriscaFit

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)


class ArSpec(BaseModel):
    """
    Autoregressive noise specification.

    Attributes:
        order: Number of lags r (0 turns the adapter into the identity)
        coefficients: phi_1..phi_r; estimated unless known is set
        standard_errors: Standard errors of the estimated coefficients
        known: Treat coefficients as given and skip estimation
        max_outer_iter: Cap on estimate/fit alternations
        tol: Largest coefficient change that counts as converged
        iterations: Alternations actually run
    """
    model_config = ConfigDict(frozen=True)

    order: int = Field(..., ge=0)
    coefficients: Optional[Tuple[float, ...]] = None
    standard_errors: Optional[Tuple[float, ...]] = None
    known: bool = False
    max_outer_iter: int = Field(AR_MAX_OUTER_ITER, ge=1)
    tol: float = Field(AR_TOLERANCE, gt=0)
    iterations: int = 0

    @model_validator(mode="after")
    def _coefficients_match_order(self) -> "ArSpec":
        if self.known and self.coefficients is None:
            raise ValueError("known AR coefficients must be supplied")
        if self.coefficients is not None and len(self.coefficients) != self.order:
            raise ValueError(f"expected {self.order} coefficients, got {len(self.coefficients)}")
        return self


class ArResult(NamedTuple):
    spec: ArSpec
    residuals: TimeSeries
    fit: PriscaFit


def lag_matrix(values: np.ndarray, order: int) -> np.ndarray:
    """Rows t = r..T-1 with columns y_{t-1}, ..., y_{t-r}."""
    T = values.size
    return np.column_stack([values[order - i:T - i] for i in range(1, order + 1)])


def weighted_least_squares(X: np.ndarray,
                           y: np.ndarray,
                           weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted least squares through a column-pivoted QR factorization.

    Args:
        X: n x k design
        y: n responses
        weights: n positive weights (inverse variances)

    Returns:
        Coefficients and their standard errors

    Raises:
        SingularDesignError: If the weighted design is rank deficient
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sqrt_w = np.sqrt(np.asarray(weights, dtype=float))
    n, k = X.shape
    if n <= k:
        raise SingularDesignError(f"{n} rows cannot identify {k} coefficients")

    Q, R, piv = qr(X * sqrt_w[:, None], mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOLERANCE * diag[0])) if diag[0] > 0 else 0
    if rank < k:
        raise SingularDesignError(f"design has rank {rank} < {k}; lags are collinear")

    z = solve_triangular(R, Q.T @ (y * sqrt_w))
    coef = np.empty(k)
    coef[piv] = z

    resid = (y - X @ coef) * sqrt_w
    scale = float(resid @ resid) / (n - k)
    R_inv = solve_triangular(R, np.eye(k))
    cov = np.empty((k, k))
    cov[np.ix_(piv, piv)] = scale * (R_inv @ R_inv.T)
    return coef, np.sqrt(np.diag(cov))


def ar_residualize(y: TimeSeries, spec: ArSpec, config: ModelConfig) -> ArResult:
    """
    Fit PRISCA to the innovations of an autoregression.

    Alternates weighted least squares for the coefficients, with weights the
    current precision estimate prod_l tau2_bar / sigma2, and a PRISCA fit on
    the residuals. The first r instants have no residual; index i of the
    residual series is input instant i + r.

    Args:
        y: Observed series, one observation per instant
        spec: AR order and, optionally, known coefficients
        config: Model configuration for the PRISCA fits

    Returns:
        ArResult with the fitted spec, residual series and the last fit
    """
    with tracer.start_as_current_span("ar_residualize") as span:
        r = spec.order
        span.set_attribute("ar_order", r)
        engine = PriscaEngine(config)

        if r == 0:
            return ArResult(spec.model_copy(update={"coefficients": ()}), y, engine.fit(y))
        if y.has_replicates:
            raise InvalidInputError("autoregression needs one observation per instant")
        if not r < y.T / 4:
            raise InvalidInputError(f"AR order {r} needs more than {4 * r} observations, got {y.T}")

        X = lag_matrix(y.values, r)
        target = y.values[r:]

        if spec.known:
            coef = np.asarray(spec.coefficients, dtype=float)
            residuals = TimeSeries(target - X @ coef)
            return ArResult(spec.model_copy(update={"iterations": 0}), residuals, engine.fit(residuals))

        weights = np.ones(target.size)
        previous: Optional[np.ndarray] = None
        for iteration in range(1, spec.max_outer_iter + 1):
            try:
                coef, se = weighted_least_squares(X, target, weights)
            except SingularDesignError as e:
                span.record_exception(e)
                logger.error("AR(%d) estimation failed: %s", r, e)
                raise
            residuals = TimeSeries(target - X @ coef)
            result = engine.fit(residuals)
            weights = np.prod(result.tau2_bar, axis=0) / config.sigma2
            if previous is not None and np.max(np.abs(coef - previous)) < spec.tol:
                break
            previous = coef
        else:
            logger.info("AR(%d) coefficients still moving after %d alternations", r, spec.max_outer_iter)

        span.set_attribute("iterations", iteration)
        fitted = spec.model_copy(update={
            "coefficients": tuple(float(c) for c in coef),
            "standard_errors": tuple(float(s) for s in se),
            "iterations": iteration,
        })
        return ArResult(fitted, residuals, result)
