"""Hyperparameters shared by the single-change model and PRISCA."""
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .constants import (
    DEFAULT_A0, DEFAULT_SIGMA2, DEFAULT_LEVEL, DEFAULT_EPSILON,
    DEFAULT_MAX_ITER, PRIOR_SUM_TOLERANCE
)
from .errors import InvalidConfigError


class ModelConfig(BaseModel):
    """
    Immutable model configuration.

    Attributes:
        a0: Shape and rate of the Gamma prior on every squared scale
        sigma2: Known baseline variance
        prior: Prior change probabilities per instant; None means uniform 1/T
        L: Number of single effects
        p: Credible level
        epsilon: Absolute ELBO change per sweep that counts as converged
        max_iter: Maximum number of sweeps
        diffuse_threshold: Largest credible set cardinality still counted as a
            detection; None means floor(T/2)
        baseline_window: Detections at or before this index are flagged as
            absorbing the unknown baseline variance (0 disables the flag)
    """
    model_config = ConfigDict(frozen=True)

    a0: float = Field(DEFAULT_A0, gt=0)
    sigma2: float = Field(DEFAULT_SIGMA2, gt=0)
    prior: Optional[Tuple[float, ...]] = None
    L: int = Field(1, ge=1)
    p: float = Field(DEFAULT_LEVEL, gt=0, lt=1)
    epsilon: float = Field(DEFAULT_EPSILON, gt=0)
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    diffuse_threshold: Optional[int] = Field(None, ge=1)
    baseline_window: int = Field(0, ge=0)

    @field_validator("a0", "sigma2", "epsilon")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("prior")
    @classmethod
    def _proper_prior(cls, value: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if value is None:
            return value
        if len(value) == 0:
            raise ValueError("prior must not be empty")
        if any(not math.isfinite(w) or w <= 0 for w in value):
            raise ValueError("prior entries must be strictly positive")
        if abs(math.fsum(value) - 1.0) > PRIOR_SUM_TOLERANCE:
            raise ValueError("prior entries must sum to 1")
        return value

    def prior_weights(self, T: int) -> np.ndarray:
        """
        Prior change probabilities for a series of length T.

        Args:
            T: Series length

        Returns:
            Array of T positive weights summing to one

        Raises:
            InvalidConfigError: If an explicit prior has the wrong length
        """
        if self.prior is None:
            return np.full(T, 1.0 / T)
        if len(self.prior) != T:
            raise InvalidConfigError(
                f"prior has {len(self.prior)} entries but the series has {T} instants"
            )
        return np.asarray(self.prior, dtype=float)

    def threshold(self, T: int) -> int:
        """Cardinality above which a credible set is classed as diffuse."""
        if self.diffuse_threshold is not None:
            return self.diffuse_threshold
        return T // 2
