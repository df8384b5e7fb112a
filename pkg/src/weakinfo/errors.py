"""Exception types shared across the library."""
from __future__ import annotations


class AdmissibilityError(ValueError):
    """Model parameters admit arbitrage or violate a structural requirement."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A run configuration failed schema validation."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the residual history so callers can report how the iteration
    stalled instead of just that it did.
    """

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
