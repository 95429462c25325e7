from typing import Callable, Optional

from opentelemetry import trace

from .config import ModelConfig
from .enums import DetrendKind, FitMethod, LRule
from .errors import InvalidConfigError
from ..core.model_core import TimeSeries
from ..core.PriscaEngine import PriscaEngine, PriscaFit, default_L
from ..core.extensions.base import Detrender
from ..core.extensions.differencing import DifferenceDetrender, IdentityDetrender

tracer = trace.get_tracer(__name__)

Fitter = Callable[[TimeSeries], PriscaFit]


class MethodFactory:
    """Factory for detrenders and fitting strategies."""

    def create_detrender(self, kind: DetrendKind) -> Detrender:
        """
        Create the detrender for a DetrendKind.

        Raises:
            ValueError: If kind is not supported
        """
        if kind == DetrendKind.NONE:
            return IdentityDetrender()
        elif kind == DetrendKind.DIFF:
            return DifferenceDetrender()
        else:
            raise ValueError(f"Unsupported detrend kind: {kind}")

    def create_fitter(self,
                      method: FitMethod,
                      config: ModelConfig,
                      L: Optional[int] = None,
                      true_K: Optional[int] = None) -> Fitter:
        """
        Create a callable that fits a series with the requested method.

        Args:
            method: How L is chosen
            config: Model configuration (its L is replaced)
            L: Explicit number of effects for FitMethod.PRISCA; floor(T/30) if None
            true_K: Number of true changes, required for FitMethod.ORACLE

        Returns:
            Function from TimeSeries to PriscaFit

        Raises:
            InvalidConfigError: If the oracle has no true K
            ValueError: If method is not supported
        """
        with tracer.start_as_current_span("create_fitter") as span:
            span.set_attribute("method", method.value)
            if method == FitMethod.AUTO:
                return PriscaEngine(config).auto_fit
            elif method == FitMethod.ORACLE:
                if not true_K:
                    raise InvalidConfigError("the oracle method needs the true number of changes")
                return PriscaEngine(config.model_copy(update={"L": true_K})).fit
            elif method == FitMethod.PRISCA:
                def fit_fixed(y: TimeSeries) -> PriscaFit:
                    effects = L if L is not None else default_L(y.T, LRule.TABLE)
                    return PriscaEngine(config.model_copy(update={"L": effects})).fit(y)
                return fit_fixed
            else:
                raise ValueError(f"Unsupported fit method: {method}")
