"""Fairness-constrained estimation for linear inverse problems."""

from .fairness import (DegenerateGroupError, FairnessDefinition, FairnessSpec,
                       fairness_violation, rho_criterion)
from .linop import (null_space_projector, penalized_solve, restricted_solve,
                    singular_values, tikhonov_solve)

__all__ = [
    "DegenerateGroupError",
    "FairnessDefinition",
    "FairnessSpec",
    "fairness_violation",
    "null_space_projector",
    "penalized_solve",
    "restricted_solve",
    "rho_criterion",
    "singular_values",
    "tikhonov_solve",
]

__version__ = "0.1.0"
