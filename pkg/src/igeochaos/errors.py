"""Exception types shared across the package."""


class IGeoError(Exception):
    """Base class for all package errors."""


class DomainError(IGeoError, ValueError):
    """A point or parameter lies outside the admissible domain."""


class UsageError(IGeoError, ValueError):
    """Arguments are inconsistent with each other (e.g. mismatched charts)."""


class SingularMetricError(DomainError):
    """The metric is degenerate at the requested point."""


class NumericError(IGeoError, RuntimeError):
    """A numerical routine failed to converge.

    Attributes
    ----------
    diagnostics : dict
        Free-form details about the failure (error estimates, counts).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class StiffnessError(NumericError):
    """The adaptive integrator could not take a step."""


class FitError(NumericError):
    """A tail fit was rejected (non-positive data or poor linearity)."""


class ValidationError(IGeoError, ValueError):
    """A scenario document is invalid."""
