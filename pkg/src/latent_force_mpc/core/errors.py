"""Exception hierarchy for Latent Force MPC."""

from pathlib import Path
from typing import Any, List, Optional, Sequence


class LatentForceMpcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(LatentForceMpcError):
    """Invalid model, kernel or experiment configuration."""

    def __init__(self, message: str, errors: Optional[List[Any]] = None):
        super().__init__(message)
        self.errors = errors or []


class ConditioningError(LatentForceMpcError):
    """A covariance matrix could not be factorized even after jitter."""


class NumericalBlowUpError(LatentForceMpcError):
    """A propagated state became non-finite."""

    def __init__(self, message: str, offending: Sequence[str] = ()):
        names = ", ".join(offending)
        super().__init__(f"{message} (non-finite: {names})" if names else message)
        self.offending = list(offending)


class ModelDomainError(LatentForceMpcError):
    """A model was evaluated outside the domain where it is defined."""


class FilterDegeneracyError(LatentForceMpcError):
    """Every particle likelihood underflowed to zero."""

    def __init__(self, message: str, innovation_norm: float):
        super().__init__(f"{message} (smallest innovation norm {innovation_norm:.6g})")
        self.innovation_norm = innovation_norm


class SolverError(LatentForceMpcError):
    """The nonlinear program cannot be started (non-finite objective or gradient)."""


class OutputError(LatentForceMpcError):
    """Writing or reading a run artifact failed."""

    def __init__(self, message: str, path: Path):
        super().__init__(f"{message}: {path}")
        self.path = Path(path)
