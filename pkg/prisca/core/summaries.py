"""Point estimates, credible sets and detection decisions from alpha vectors."""
import logging
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict

from ..helpers.errors import InvalidInputError

if TYPE_CHECKING:
    from .PriscaEngine import PriscaFit

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)


class CredibleSet(BaseModel):
    """
    Smallest set of instants whose posterior mass exceeds the level.

    Attributes:
        indices: 1-based instants, in decreasing order of alpha
        total_mass: Posterior mass covered by the set
        level: Requested credible level p
        max_alpha: Largest alpha entry of the effect that produced the set
        effect: 1-based effect number, when built from a fit
    """
    model_config = ConfigDict(frozen=True)

    indices: Tuple[int, ...]
    total_mass: float
    level: float
    max_alpha: float
    effect: Optional[int] = None

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, t: int) -> bool:
        return t in self.indices

    def overlaps(self, other: "CredibleSet") -> bool:
        return not set(self.indices).isdisjoint(other.indices)


class Detection(BaseModel):
    """A detected change: the effect, its MAP instant and credible set."""
    model_config = ConfigDict(frozen=True)

    effect: int
    estimate: int
    credible_set: CredibleSet
    baseline: bool = False


class ChangePointReport(BaseModel):
    """
    Detection outcome for one fit.

    Attributes:
        k_hat: Number of detected changes
        detections: Kept effects, in effect order
        discarded_effects: Effects whose credible set is too large (diffuse)
        overlapping_effects: Effects removed because their set overlapped a
            stronger one
        threshold: Cardinality limit used for the diffuse rule
        T: Series length
    """
    model_config = ConfigDict(frozen=True)

    k_hat: int
    detections: Tuple[Detection, ...]
    discarded_effects: Tuple[int, ...]
    overlapping_effects: Tuple[int, ...] = ()
    threshold: int
    T: int

    @property
    def change_points(self) -> List[int]:
        """Point estimates sorted by time."""
        return sorted(d.estimate for d in self.detections)


def _as_alpha(alpha: Sequence[float]) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise InvalidInputError("alpha must be a non-empty vector")
    return alpha


def map_estimate(alpha: Sequence[float]) -> int:
    """
    Maximum a posteriori change instant.

    Args:
        alpha: Posterior change probabilities

    Returns:
        1-based argmax; ties go to the smallest index
    """
    return int(np.argmax(_as_alpha(alpha))) + 1


def credible_set(alpha: Sequence[float], p: float, effect: Optional[int] = None) -> CredibleSet:
    """
    Credible set at level p.

    Instants are ranked by alpha (ties by index) and accumulated until the
    running mass strictly exceeds p.

    Args:
        alpha: Posterior change probabilities
        p: Credible level in (0, 1)
        effect: Optional effect number recorded on the set

    Returns:
        The cardinality-minimal CredibleSet
    """
    alpha = _as_alpha(alpha)
    if not 0 < p < 1:
        raise InvalidInputError(f"credible level must lie in (0, 1), got {p}")
    order = np.lexsort((np.arange(alpha.size), -alpha))
    mass = np.cumsum(alpha[order])
    size = min(int(np.searchsorted(mass, p, side="right")) + 1, alpha.size)
    return CredibleSet(
        indices=tuple(int(i) + 1 for i in order[:size]),
        total_mass=float(mass[size - 1]),
        level=p,
        max_alpha=float(alpha[order[0]]),
        effect=effect,
    )


def dedup_overlaps(candidates: Sequence[CredibleSet]) -> List[CredibleSet]:
    """
    Remove overlapping credible sets.

    Sets are visited by decreasing max_alpha (ties keep input order); a set
    is kept only if it shares no instant with a set kept before it.

    Returns:
        Survivors in their input order
    """
    order = sorted(range(len(candidates)), key=lambda i: -candidates[i].max_alpha)
    kept: List[int] = []
    for i in order:
        if all(not candidates[i].overlaps(candidates[j]) for j in kept):
            kept.append(i)
    return [candidates[i] for i in sorted(kept)]


def detect(fit: "PriscaFit",
           p: Optional[float] = None,
           threshold: Optional[int] = None) -> ChangePointReport:
    """
    Turn a fit into detected change points.

    Args:
        fit: PRISCA fit, converged or not
        p: Credible level; defaults to the fit's configuration
        threshold: Diffuse cardinality limit; defaults to the configuration
            override or floor(T/2)

    Returns:
        ChangePointReport
    """
    with tracer.start_as_current_span("detect") as span:
        config = fit.config
        level = config.p if p is None else p
        limit = config.threshold(fit.T) if threshold is None else threshold

        sets = [credible_set(e.alpha, level, effect=l + 1) for l, e in enumerate(fit.effects)]
        concentrated = [cs for cs in sets if len(cs) <= limit]
        discarded = tuple(cs.effect for cs in sets if len(cs) > limit)
        survivors = dedup_overlaps(concentrated)
        surviving = {cs.effect for cs in survivors}
        overlapping = tuple(cs.effect for cs in concentrated if cs.effect not in surviving)

        detections = []
        for cs in survivors:
            estimate = map_estimate(fit.effects[cs.effect - 1].alpha)
            detections.append(Detection(
                effect=cs.effect,
                estimate=estimate,
                credible_set=cs,
                baseline=estimate <= config.baseline_window,
            ))

        span.set_attribute("k_hat", len(detections))
        span.set_attribute("effects", len(sets))
        if overlapping:
            logger.debug("dropped overlapping effects %s", overlapping)
        return ChangePointReport(
            k_hat=len(detections),
            detections=tuple(detections),
            discarded_effects=discarded,
            overlapping_effects=overlapping,
            threshold=limit,
            T=fit.T,
        )


def variance_profile(fit: "PriscaFit") -> np.ndarray:
    """Posterior estimate of the variance at every instant, sigma2 / prod_l tau2_bar."""
    return fit.config.sigma2 / np.prod(fit.tau2_bar, axis=0)
