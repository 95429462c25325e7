"""
This module contains enums for the fitting methods, report formats and
preprocessing choices used throughout the application.
"""
from enum import Enum


class FitMethod(Enum):
    """Enum for the ways the number of effects L is chosen"""
    PRISCA = "prisca"   # fixed L (floor(T/30) unless given)
    AUTO = "auto"       # increase L until k_hat stops rising
    ORACLE = "oracle"   # L equal to the true number of changes


class ReportFormat(Enum):
    """Enum for supported report formats"""
    JSON = "json"
    CSV = "csv"


class DetrendKind(Enum):
    """Enum for mean-removal adapters applied before fitting"""
    NONE = "none"
    DIFF = "diff"


class LRule(Enum):
    """Enum for default choices of L from the series length"""
    TABLE = "table"
    SPACING = "spacing"


class SweepOrder(Enum):
    """Enum for the order effects are updated within a sweep"""
    FORWARD = "forward"   # l = 1..L
    REVERSE = "reverse"   # l = L..1
