"""Exception types raised across the package."""

from __future__ import annotations


class BellKeyError(Exception):
    """Base class for all package errors."""


class DegenerateParametersError(BellKeyError, ValueError):
    """Parameters sit on a degenerate point (e.g. sin(theta) = 0)."""


class NotCertifiedError(BellKeyError, ValueError):
    """A self-test dependent quantity was requested for a non-self-testing point."""


class ConvergenceError(BellKeyError, RuntimeError):
    """A numerical search ran out of budget before reaching its step floor.

    The best point seen so far is kept on the exception so callers can still
    inspect it.
    """

    def __init__(self, message: str, best_value: float, best_strategy=None, evaluations: int = 0):
        super().__init__(message)
        self.best_value = best_value
        self.best_strategy = best_strategy
        self.evaluations = evaluations


class RangeError(BellKeyError, ValueError):
    """Requested target lies outside the achievable interval (low, high]."""

    def __init__(self, message: str, low: float, high: float):
        super().__init__(message)
        self.low = low
        self.high = high


class NotOnBoundaryError(BellKeyError, ValueError):
    """A correlator point is not on the boundary of the quantum correlator set."""


class InsufficientStatisticsError(BellKeyError, ValueError):
    """Some input pair has no recorded test rounds."""
