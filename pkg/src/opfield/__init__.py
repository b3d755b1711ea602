"""Truncated operator-valued field equations on compactified momentum grids."""

from .errors import (
    ConfigError,
    GridMismatchError,
    IncompleteTableError,
    NotPositiveFunctionalError,
    ShellProximityWarning,
    SingularShellError,
    SingularStepWarning,
    TruncationWarning,
)
from .grid import MomentumGrid, Signature, build_grid, kl_momentum, translation_generator
from .operators import (
    FieldOperator,
    StateVector,
    VacuumProjector,
    apply_field,
    big_T,
    compose,
    inv_T,
    normal_order_potential,
    normal_order_power,
    operator_norm,
    vacuum_expectation,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FieldOperator",
    "GridMismatchError",
    "IncompleteTableError",
    "MomentumGrid",
    "NotPositiveFunctionalError",
    "ShellProximityWarning",
    "Signature",
    "SingularShellError",
    "SingularStepWarning",
    "StateVector",
    "TruncationWarning",
    "VacuumProjector",
    "__version__",
    "apply_field",
    "big_T",
    "build_grid",
    "compose",
    "inv_T",
    "kl_momentum",
    "normal_order_potential",
    "normal_order_power",
    "operator_norm",
    "translation_generator",
    "vacuum_expectation",
]
