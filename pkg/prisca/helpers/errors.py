"""Exceptions raised by the library."""
from pathlib import Path
from typing import Optional, Union


class PriscaError(Exception):
    """Base class for every error raised by prisca."""


class InvalidInputError(PriscaError, ValueError):
    """Data, index or vector arguments that violate a precondition."""


class InvalidConfigError(PriscaError, ValueError):
    """Configuration that is inconsistent with the data or with other options."""


class IngestError(PriscaError, ValueError):
    """A data file could not be turned into a TimeSeries."""

    def __init__(self, message: str, line: Optional[int] = None,
                 path: Optional[Union[str, Path]] = None):
        self.line = line
        self.path = str(path) if path is not None else None
        location = ""
        if self.path:
            location += f"{self.path}:"
        if line is not None:
            location += f"line {line}:"
        super().__init__(f"{location} {message}" if location else message)


class SingularDesignError(PriscaError, ArithmeticError):
    """Normal equations of a regression are rank deficient."""


class InfeasibleSpecError(PriscaError, ValueError):
    """A simulation spec whose change points cannot be placed."""
