"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or out-of-domain input (shapes, Hermiticity, ranges)."""


class SolverError(RuntimeError):
    """A conic solve failed or returned an untrustworthy point."""

    def __init__(self, message, status=None, residuals=None):
        super().__init__(message)
        self.status = status
        self.residuals = residuals


class InfeasibleError(SolverError):
    """The requested optimisation problem has no feasible point."""


class UnsupportedError(NotImplementedError):
    """The operation is not available for this input size."""
