"""Exponential sums along orbits of Moebius maps over prime fields."""

from .errors import BudgetExceededError, DomainError, UnsupportedError
from .moebius import INF, MoebiusMap, OrbitSpec, period_direct, period_spectral

__all__ = [
    "INF", "MoebiusMap", "OrbitSpec", "period_direct", "period_spectral",
    "DomainError", "UnsupportedError", "BudgetExceededError",
]
__version__ = "0.1.0"
