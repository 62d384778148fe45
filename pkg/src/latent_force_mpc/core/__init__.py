"""Core definitions shared by every module."""

from latent_force_mpc.core.errors import (
    LatentForceMpcError,
    ConfigurationError,
    ConditioningError,
    NumericalBlowUpError,
    ModelDomainError,
    FilterDegeneracyError,
    SolverError,
    OutputError,
)

__all__ = [
    "LatentForceMpcError",
    "ConfigurationError",
    "ConditioningError",
    "NumericalBlowUpError",
    "ModelDomainError",
    "FilterDegeneracyError",
    "SolverError",
    "OutputError",
]
