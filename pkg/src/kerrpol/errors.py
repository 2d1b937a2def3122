"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, numerical
failures (instability, singular transfer) exit 2.
"""


class KerrpolError(Exception):
    """Base class for package errors."""


class ValidationError(KerrpolError, ValueError):
    """Invalid parameter, configuration value, or violated precondition."""


class NumericalError(KerrpolError, RuntimeError):
    """Numerical failure: instability, singularity, non-convergence."""


class UnstableModelError(NumericalError):
    """Operation requires a stable fluctuation model (margin < 0)."""


class SingularTransferError(NumericalError):
    """Sideband transfer matrix is singular (marginally stable point)."""
