"""Numerical toolkit for step-path processes: path spaces, Skorokhod-type
distances, discrete process laws, uniform bound diagnostics, and weak
convergence checks."""

from .errors import DomainError, SkorlabError, ValidationError
from .paths import CadlagPath, Coordinate, Partition, TimeHorizon

__version__ = "0.1.0"

__all__ = [
    "CadlagPath",
    "Coordinate",
    "DomainError",
    "Partition",
    "SkorlabError",
    "TimeHorizon",
    "ValidationError",
    "__version__",
]
