"""Exception and warning types shared across the package."""


class GridMismatchError(ValueError):
    """Operators or states live on different momentum grids."""


class SingularShellError(ArithmeticError):
    """A mass-shell factor fell below the regularization floor."""


class NotPositiveFunctionalError(ValueError):
    """Gram matrix has an eigenvalue significantly below zero."""


class IncompleteTableError(KeyError):
    """A required moment value is missing from a moment table."""


class ConfigError(ValueError):
    """Run configuration is unreadable or invalid."""


class ShellProximityWarning(RuntimeWarning):
    """A mass-shell factor is closer to zero than the configured floor."""


class SingularStepWarning(RuntimeWarning):
    """Gauss-Newton normal equations were rank deficient; a regularized step was used."""


class TruncationWarning(UserWarning):
    """The moment table is too short to represent boundary words exactly."""
