"""Stationary Matérn covariance functions and an exact GP regression oracle.

Only half-integer smoothness (1/2, 3/2, 5/2) is supported: those are the
members of the family whose spectral densities are rational, which is what
the state-space conversion in :mod:`latent_force_mpc.gp.state_space` needs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import linalg, special

from latent_force_mpc.core.errors import ConditioningError

logger = logging.getLogger(__name__)

SUPPORTED_NU = (0.5, 1.5, 2.5)
JITTER_SCALE = 1e-10


class KernelSpec(BaseModel):
    """Matérn hyperparameters θ = (σ², ℓ, ν).

    Attributes:
        sigma2: Variance scale σ² (units of w²)
        ell: Length scale ℓ (seconds)
        nu: Smoothness ν, one of 1/2, 3/2, 5/2
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma2: float = Field(4.0, gt=0.0)
    ell: float = Field(4.0, gt=0.0)
    nu: float = 2.5

    @field_validator("nu")
    @classmethod
    def _half_integer(cls, value: float) -> float:
        if not any(math.isclose(value, nu) for nu in SUPPORTED_NU):
            raise ValueError(f"nu must be one of {SUPPORTED_NU}, got {value}")
        return value

    @property
    def order(self) -> int:
        """Latent state dimension p = ν + 1/2."""
        return int(round(self.nu + 0.5))

    @property
    def lam(self) -> float:
        """Rate λ = √(2ν)/ℓ."""
        return math.sqrt(2.0 * self.nu) / self.ell


@dataclass(frozen=True)
class GramMatrix:
    """Covariance matrix κ(t_i − t_j) over a set of sample instants."""

    entries: np.ndarray
    times: np.ndarray

    @property
    def size(self) -> int:
        return len(self.times)


def matern_eval(spec: KernelSpec, tau: ArrayLike) -> np.ndarray:
    """Evaluate the Matérn covariance with the closed half-integer forms.

    Args:
        spec: Kernel hyperparameters
        tau: Time lag(s) in seconds; evaluated at |τ|

    Returns:
        κ(|τ|) with the same shape as ``tau``
    """
    r = np.abs(np.asarray(tau, dtype=float))
    order = spec.order
    if order == 1:
        return spec.sigma2 * np.exp(-r / spec.ell)
    scaled = math.sqrt(2.0 * spec.nu) * r / spec.ell
    if order == 2:
        poly = 1.0 + scaled
    else:
        poly = 1.0 + scaled + scaled**2 / 3.0
    return spec.sigma2 * poly * np.exp(-scaled)


def matern_eval_bessel(spec: KernelSpec, tau: ArrayLike) -> np.ndarray:
    """Evaluate the general Γ/K_ν form of the Matérn covariance.

    Used as the oracle for :func:`matern_eval`; never on the control path.

    Args:
        spec: Kernel hyperparameters
        tau: Time lag(s) in seconds

    Returns:
        κ(|τ|) computed through the modified Bessel function of the second kind
    """
    r = np.abs(np.asarray(tau, dtype=float))
    scaled = math.sqrt(2.0 * spec.nu) * r / spec.ell
    value = np.full(r.shape, spec.sigma2, dtype=float)
    positive = scaled > 0.0
    s = scaled[positive]
    value[positive] = (
        spec.sigma2
        * 2.0 ** (1.0 - spec.nu)
        / special.gamma(spec.nu)
        * s**spec.nu
        * special.kv(spec.nu, s)
    )
    return value


def gram_matrix(spec: KernelSpec, times: ArrayLike, other: Optional[ArrayLike] = None) -> GramMatrix:
    """Build K with entries κ(t_i − t'_j).

    Args:
        spec: Kernel hyperparameters
        times: Row sample instants
        other: Column sample instants (defaults to ``times``)

    Returns:
        GramMatrix over ``times``
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    s = t if other is None else np.atleast_1d(np.asarray(other, dtype=float))
    entries = matern_eval(spec, t[:, None] - s[None, :])
    return GramMatrix(entries=entries, times=t)


def gp_posterior(
    spec: KernelSpec,
    train_times: ArrayLike,
    train_values: ArrayLike,
    noise_var: float,
    test_times: ArrayLike,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact GP regression: predictive mean and variance at test instants.

    Args:
        spec: Kernel hyperparameters
        train_times: Distinct training instants
        train_values: Observed values at the training instants
        noise_var: Observation noise variance added to the Gram diagonal
        test_times: Prediction instants

    Returns:
        Tuple of (posterior means, posterior variances)

    Raises:
        ConditioningError: If the regularized Gram matrix is not positive definite
    """
    t_train = np.atleast_1d(np.asarray(train_times, dtype=float))
    y_train = np.atleast_1d(np.asarray(train_values, dtype=float))
    t_test = np.atleast_1d(np.asarray(test_times, dtype=float))
    if noise_var < 0.0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")

    prior_var = np.full(t_test.shape, spec.sigma2)
    if t_train.size == 0:
        return np.zeros(t_test.shape), prior_var

    k_nn = gram_matrix(spec, t_train).entries
    k_ns = gram_matrix(spec, t_train, t_test).entries
    k_nn = k_nn + (noise_var + JITTER_SCALE * spec.sigma2) * np.eye(t_train.size)

    try:
        factor = linalg.cho_factor(k_nn, lower=True, check_finite=True)
    except linalg.LinAlgError as e:
        raise ConditioningError(
            f"Gram matrix over {t_train.size} points is not positive definite after jitter"
        ) from e

    mean = k_ns.T @ linalg.cho_solve(factor, y_train)
    reduction = np.einsum("ij,ij->j", k_ns, linalg.cho_solve(factor, k_ns))
    variance = np.maximum(prior_var - reduction, 0.0)
    logger.debug(f"GP posterior over {t_train.size} training / {t_test.size} test points")
    return mean, variance
