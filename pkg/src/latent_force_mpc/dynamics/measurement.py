"""Measurement model y = h(x̄) + v with Gaussian noise v ~ N(0, R_v)."""

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from latent_force_mpc.core.errors import ConfigurationError

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class MeasurementModel:
    """Linear selection of augmented-state components plus Gaussian noise.

    Attributes:
        observed: Indices of x̄ that are measured (h selects these)
        R_v: Measurement noise covariance, symmetric positive definite
    """

    observed: Tuple[int, ...]
    R_v: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _log_det: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        R_v = np.atleast_2d(np.asarray(self.R_v, dtype=float))
        if R_v.shape != (len(self.observed), len(self.observed)):
            raise ConfigurationError(
                f"R_v has shape {R_v.shape} for {len(self.observed)} observed states"
            )
        if not np.allclose(R_v, R_v.T):
            raise ConfigurationError("R_v must be symmetric")
        try:
            chol = np.linalg.cholesky(R_v)
        except np.linalg.LinAlgError as e:
            raise ConfigurationError("R_v must be positive definite") from e
        object.__setattr__(self, "R_v", R_v)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_log_det", float(2.0 * np.sum(np.log(np.diag(chol)))))

    @classmethod
    def diagonal(cls, observed: Sequence[int], std: Sequence[float]) -> "MeasurementModel":
        """Independent noise with the given standard deviations."""
        return cls(observed=tuple(int(i) for i in observed), R_v=np.diag(np.square(std)))

    @property
    def n_y(self) -> int:
        return len(self.observed)

    @property
    def noise_factor(self) -> np.ndarray:
        """Lower Cholesky factor L with L Lᵀ = R_v."""
        return self._chol

    def h(self, xbar: ArrayLike) -> np.ndarray:
        """Noise-free observation, shape (..., n_y)."""
        return np.asarray(xbar, dtype=float)[..., list(self.observed)]

    def log_likelihood(self, y: ArrayLike, xbar: ArrayLike) -> np.ndarray:
        """Gaussian log density log N(y; h(x̄), R_v) for each row of ``xbar``."""
        innovation = np.asarray(y, dtype=float) - self.h(xbar)
        whitened = linalg.solve_triangular(
            self._chol, innovation.reshape(-1, self.n_y).T, lower=True
        ).T
        maha = np.sum(whitened**2, axis=-1).reshape(innovation.shape[:-1])
        return -0.5 * (maha + self._log_det + self.n_y * LOG_2PI)


def measure(model: MeasurementModel, xbar: ArrayLike, rng: np.random.Generator) -> np.ndarray:
    """Draw y = h(x̄) + v.

    Args:
        model: Measurement model
        xbar: Augmented state, shape (..., n_a)
        rng: Random generator

    Returns:
        Measurement, shape (..., n_y)
    """
    clean = model.h(xbar)
    noise = rng.standard_normal(clean.shape) @ model.noise_factor.T
    return clean + noise
