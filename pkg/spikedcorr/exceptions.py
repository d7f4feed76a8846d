"""Exceptions and warnings raised by spikedcorr.

The error kinds mirror the failure modes of the theory: bad user input, a violated hypothesis of a limit theorem,
a numerical routine that did not converge and an operation that is not defined for the chosen distribution.
"""


class SpikedCorrError(Exception):
    """Base class for all spikedcorr errors."""


class InvalidArgument(SpikedCorrError, ValueError):
    """Unacceptable choice of parameters."""


class DegenerateData(InvalidArgument):
    """Data matrix with a zero-variance row.

    Parameters
    ----------
    message : str
        Error message.
    row : int
        Index of the offending row (0-based).
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DomainError(SpikedCorrError, ValueError):
    """A hypothesis of the asymptotic theory does not hold (subcritical, critical or non-simple spike, t inside the
    support of a spectral law...)."""


class NumericalFailure(SpikedCorrError, ArithmeticError):
    """A numerical routine failed.

    Parameters
    ----------
    message : str
        Error message.
    residual : float, default=None
        Residual or error estimate reported by the failing routine.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedOperation(SpikedCorrError, NotImplementedError):
    """Operation not available for the given distribution specification."""


class NearCriticalWarning(UserWarning):
    """Spike close to the phase transition. Asymptotic variances blow up as the derivative of rho goes to 0."""
