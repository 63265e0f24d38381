from __future__ import annotations


class ValidationError(ValueError):
    """A precondition of an operation does not hold."""


class QuadratureError(RuntimeError):
    """A quadrature did not reach its tolerance."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate
