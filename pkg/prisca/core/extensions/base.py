from abc import ABC, abstractmethod

from ...helpers.enums import DetrendKind
from ..model_core import TimeSeries


class Detrender(ABC):
    """
    Abstract base class for mean-removal adapters.
    A detrender maps the observed series to one whose mean is (close to) zero,
    which is the only setting PRISCA models.
    """

    def __init__(self, kind: DetrendKind):
        """
        Initialize the detrender.

        Args:
            kind: The DetrendKind this adapter implements
        """
        self.kind = kind

    @abstractmethod
    def apply(self, y: TimeSeries) -> TimeSeries:
        """
        Remove the mean trend from y.
        Must be implemented by subclasses.

        Args:
            y: Observed series

        Returns:
            Series handed to PRISCA
        """
        pass

    @property
    def axis_note(self) -> str:
        """How indices of the transformed series relate to the input axis."""
        return "indices refer to the input axis"
