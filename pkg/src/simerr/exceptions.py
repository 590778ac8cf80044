"""Exception and warning types raised across the package."""

from __future__ import annotations


class SimErrError(Exception):
    """Base class for all errors raised by simerr."""

    module = "simerr"


class SpecError(SimErrError, ValueError):
    """An estimand selector or quantile level does not resolve against the data."""

    module = "estimation"


class DegenerateDensityError(SimErrError):
    """A density estimate at a quantile is zero or numerically indistinguishable from it."""

    module = "estimation"


class InsufficientDataError(SimErrError, ValueError):
    module = "covariance"


class BatchConfigError(SimErrError, ValueError):
    module = "covariance"


class NumericError(SimErrError, ArithmeticError):
    module = "covariance"


class FactorizationError(SimErrError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""

    module = "mvn"

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class DomainError(SimErrError, ValueError):
    module = "mvn"


class RegionError(SimErrError):
    module = "region"


class StudyAbortedError(SimErrError):
    module = "harness"


class IngestError(SimErrError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    module = "plotio"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PairingError(SimErrError, ValueError):
    module = "plotio"


class SimErrWarning(UserWarning):
    """Base class for recoverable conditions surfaced to the caller."""


class BatchMeansWarning(SimErrWarning):
    pass


class ToleranceWarning(SimErrWarning):
    """The MVN integrator exhausted its point budget before meeting abs_tol."""


class DegenerateVarianceWarning(SimErrWarning):
    pass
