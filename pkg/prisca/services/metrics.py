"""Accuracy metrics for estimated change point sets."""
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from ..helpers.errors import InvalidInputError


def hausdorff_like(estimated: Iterable[int], truth: Iterable[int], T: Optional[int] = None) -> float:
    """
    One-sided Hausdorff distance max_{eta in truth} min_{x in estimated} |x - eta|.

    Args:
        estimated: Estimated change instants
        truth: True change instants, non-empty
        T: Series length, returned when nothing was estimated

    Returns:
        Distance from the truth to the closest estimates

    Raises:
        InvalidInputError: If truth is empty, or estimated is empty and T is missing
    """
    truth = np.asarray(sorted(set(truth)), dtype=float)
    estimated = np.asarray(sorted(set(estimated)), dtype=float)
    if truth.size == 0:
        raise InvalidInputError("true change set must not be empty")
    if estimated.size == 0:
        if T is None:
            raise InvalidInputError("series length is needed to score an empty estimate")
        return float(T)
    gaps = np.abs(truth[:, None] - estimated[None, :])
    return float(gaps.min(axis=1).max())


def match_detections(estimates: Sequence[int], truth: Sequence[int], radius: float) -> Dict[int, int]:
    """
    Pair true changes with point estimates no further than radius.

    Pairs are formed greedily by increasing distance (ties by true position,
    then estimate position); each true change and each estimate is used once.

    Returns:
        Map from position in truth to position in estimates
    """
    pairs = sorted(
        (abs(e - c), i, j)
        for i, c in enumerate(truth)
        for j, e in enumerate(estimates)
        if abs(e - c) <= radius
    )
    matched: Dict[int, int] = {}
    used = set()
    for _, i, j in pairs:
        if i in matched or j in used:
            continue
        matched[i] = j
        used.add(j)
    return matched


def coverage_counts(estimates: Sequence[int],
                    sets: Sequence[Iterable[int]],
                    truth: Sequence[int],
                    radius: float) -> Tuple[int, int]:
    """
    Count detected true changes and how many fall inside their matched set.

    Args:
        estimates: Point estimates, one per detection
        sets: Credible set indices, aligned with estimates
        truth: True change instants
        radius: Detection distance

    Returns:
        (covered, detected)
    """
    matched = match_detections(estimates, truth, radius)
    covered = sum(1 for i, j in matched.items() if truth[i] in set(sets[j]))
    return covered, len(matched)
