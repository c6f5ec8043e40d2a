"""Exception types shared across the package."""


class SpathacError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SpathacError, ValueError):
    """Malformed or out-of-contract input (bad shapes, non-finite values, ...)."""


class ParseError(InvalidInputError):
    """Tabular input could not be parsed; carries a human-readable location."""


class SingularDesignError(SpathacError):
    """Design matrix is rank deficient.

    ``column`` names the offending regressor when it can be identified.
    """

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class NotPositiveDefiniteError(SpathacError):
    """Covariance matrix could not be factorized even after jitter escalation."""


class InsufficientPairsError(SpathacError):
    """No distance bin received any pair; the covariogram is undefined."""


class UndefinedStatisticError(SpathacError):
    """A statistic is undefined for the given input (e.g. zero-variance residuals)."""


class CampaignError(SpathacError):
    """A Monte Carlo campaign failed (too many failed iterations)."""
