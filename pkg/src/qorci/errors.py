"""Exception hierarchy for the qorci package."""


class QorciError(Exception):
    """Base class for all qorci errors."""


class DomainError(QorciError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataError(QorciError):
    """Input data violates a precondition (wrong sign, too few points, ...)."""


class DegenerateDataError(DataError):
    """All observations are identical; nothing can be estimated."""


class NumericalError(QorciError):
    """A numerical procedure failed (no bracket, no convergence, ...)."""


class FitError(NumericalError):
    """Maximum-likelihood fitting failed to produce a usable result."""


class ZeroDensityError(NumericalError):
    """A kernel density evaluated to zero where a positive value is required."""
