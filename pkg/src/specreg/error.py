"""Custom error classes"""
import numpy as np


class NonSymmetricError(ValueError):
    """Exception class for matrices that are not symmetric."""
    pass


class EigFailureError(ArithmeticError):
    """Exception class for eigendecompositions that did not converge."""
    pass


class NotPositiveSemidefiniteError(EigFailureError):
    """Exception class for matrices with eigenvalues below the negativity
    tolerance."""
    pass


class GridTooCoarseError(ValueError):
    """Exception class for evaluation grids below the documented minimum
    resolution."""
    pass


class DomainError(ValueError):
    """Exception class for points outside of the domain of a kernel."""
    pass


class WrongKindError(TypeError):
    """Exception class for operations that require a specific kind of
    kernel."""
    pass


class StepTooLargeError(ValueError):
    """Exception class for Landweber step sizes violating
    ``tau * kappa2 <= 1``."""
    pass


class BadParamsError(ValueError):
    """Exception class for invalid problem or experiment parameters."""
    pass


class KernelMismatchError(ValueError):
    """Exception class for estimators that were fitted with a kernel other
    than the one of the problem."""
    pass


class InsufficientGridError(ValueError):
    """Exception class for sample size grids that cannot support a slope
    fit."""
    pass


class ConfigError(ValueError):
    """Exception class for malformed or invalid experiment configuration."""
    pass


class AcceptanceError(AssertionError):
    """Exception class for experiment results that violate acceptance
    thresholds."""
    pass


#: exception types that the command line program reports as numerical
#: failures
NUMERICAL_ERRORS = (ArithmeticError, np.linalg.LinAlgError)
