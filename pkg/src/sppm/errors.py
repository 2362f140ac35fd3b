"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class SppmError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(SppmError, ValueError):
    """A precondition on the caller's input was violated."""

    exit_code = 1


class NumericError(SppmError, ArithmeticError):
    """A numerical operation failed (singular matrix, non-convergence, ...)."""

    exit_code = 2


class CapacityError(SppmError):
    """The request exceeds a documented size ceiling."""

    exit_code = 3


class DomainError(NumericError):
    """An argument lies outside the domain where a quantity is defined."""

    def __init__(self, message, threshold=None):
        super().__init__(message)
        self.threshold = threshold


class SolverError(NumericError):
    """No mean-field start converged."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or []


class ScanError(NumericError):
    """A parameter scan never met its detection predicate."""
