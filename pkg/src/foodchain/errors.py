"""Exception types shared across the package."""


class FoodChainError(Exception):
    """Base class for all package errors."""


class DomainError(FoodChainError, ValueError):
    """A parameter or state lies outside the model's domain."""


class UsageError(FoodChainError, ValueError):
    """An operation was called on inputs it does not accept."""


class NoCyclePredicted(UsageError):
    """The planar subsystem has no limit cycle for these parameters."""


class IntegrationError(FoodChainError, RuntimeError):
    """Adaptive integration failed; ``partial`` holds what was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConvergenceError(FoodChainError, RuntimeError):
    """An iterative procedure did not converge."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class ConsistencyError(FoodChainError, RuntimeError):
    """Two independent computations of the same quantity disagree."""
