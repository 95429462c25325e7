"""Detrending and reshaping adapters applied before fitting."""
import numpy as np

from ...helpers.enums import DetrendKind
from ...helpers.errors import InvalidInputError
from ..model_core import TimeSeries
from .base import Detrender


def difference_detrend(y: TimeSeries) -> TimeSeries:
    """
    First-order differences (y_{t+1} - y_t) for t = 1..T-1.

    A variance change at input instant t0 shows up at differenced index
    t0 - 1 or t0, so estimates on the differenced axis carry a +1 ambiguity.

    Raises:
        InvalidInputError: If T < 2 or y has replicates
    """
    if y.has_replicates:
        raise InvalidInputError("differencing needs one observation per instant")
    if y.T < 2:
        raise InvalidInputError("differencing needs at least two observations")
    return TimeSeries(np.diff(y.values))


def cumulative_reconstruct(diffs: TimeSeries, first: float) -> TimeSeries:
    """Invert difference_detrend given the first input value."""
    return TimeSeries(np.concatenate(([first], first + np.cumsum(diffs.values))))


def fold_periodic(values, period: int) -> TimeSeries:
    """
    Treat every complete cycle of length period as one realisation.

    Instant t of the result collects all observations at phase t, giving a
    multi-observation series of length period. A trailing incomplete cycle is
    dropped.

    Raises:
        InvalidInputError: If values is a TimeSeries that already has replicates
    """
    if isinstance(values, TimeSeries):
        if values.has_replicates:
            raise InvalidInputError("periodic folding needs one observation per instant")
        values = values.values
    values = np.asarray(values, dtype=float).ravel()
    if period < 1:
        raise InvalidInputError("period must be a positive integer")
    cycles = values.size // period
    if cycles < 1:
        raise InvalidInputError(f"need at least one full cycle of {period} observations")
    folded = values[:cycles * period].reshape(cycles, period)
    return TimeSeries(folded.T.ravel(), np.full(period, cycles))


def thin(y: TimeSeries, step: int) -> TimeSeries:
    """Keep every step-th observation, starting with the first."""
    if step < 1:
        raise InvalidInputError("thinning step must be a positive integer")
    if y.has_replicates:
        raise InvalidInputError("thinning needs one observation per instant")
    return TimeSeries(y.values[::step])


class IdentityDetrender(Detrender):
    """Leaves the series untouched."""

    def __init__(self):
        super().__init__(DetrendKind.NONE)

    def apply(self, y: TimeSeries) -> TimeSeries:
        return y


class DifferenceDetrender(Detrender):
    """Models first-order differences instead of the raw series."""

    def __init__(self):
        super().__init__(DetrendKind.DIFF)

    def apply(self, y: TimeSeries) -> TimeSeries:
        return difference_detrend(y)

    @property
    def axis_note(self) -> str:
        return ("indices refer to the differenced axis: index i is y[i+1] - y[i], "
                "so an input change at i or i+1")
