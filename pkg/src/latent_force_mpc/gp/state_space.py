"""State-space (linear SDE) form of a Matérn Gaussian process.

A Matérn GP with half-integer ν is the output of

    dz = A z dt + B dβ,    w = C z,    E[dβ dβᵀ] = q dt

where A is the companion matrix of (λ + s)^p, p = ν + 1/2. This module builds
that realization, its stationary covariance, and its exact discretization.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg, special

from latent_force_mpc.core.errors import ConfigurationError
from latent_force_mpc.gp.kernels import SUPPORTED_NU, KernelSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentSde:
    """Companion-form linear SDE realizing a stationary GP.

    Attributes:
        A: p×p companion drift matrix (1/s)
        B: p×1 input vector [0 … 0 1]ᵀ
        C: 1×p output selector [1 0 … 0]
        q: Driving white-noise spectral density Q_β
        Pinf: p×p stationary covariance solving A P + P Aᵀ + B q Bᵀ = 0
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    q: float
    Pinf: np.ndarray

    @property
    def p(self) -> int:
        """Latent state dimension."""
        return self.A.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly view of the matrices."""
        return {
            "p": self.p,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "q": self.q,
            "Pinf": self.Pinf.tolist(),
        }


@dataclass(frozen=True)
class DiscreteLatent:
    """Exact zero-order discretization of a :class:`LatentSde`.

    Attributes:
        Ad: Transition exp(A·dt)
        Qd: Process noise covariance ∫₀^dt exp(As) B q Bᵀ exp(Aᵀs) ds
        dt: Step in seconds
    """

    Ad: np.ndarray
    Qd: np.ndarray
    dt: float


def _noise_density(spec: KernelSpec) -> float:
    nu = spec.nu
    return (
        spec.sigma2
        * 2.0
        * math.sqrt(math.pi)
        * special.gamma(nu + 0.5)
        / special.gamma(nu)
        * spec.lam ** (2.0 * nu)
    )


def spectral_density(spec: KernelSpec, omega: ArrayLike) -> np.ndarray:
    """Matérn power spectral density S(ω) = q / (λ² + ω²)^(ν+1/2).

    Args:
        spec: Kernel hyperparameters
        omega: Angular frequency (rad/s)

    Returns:
        S(ω), even in ω
    """
    w = np.asarray(omega, dtype=float)
    return _noise_density(spec) * (spec.lam**2 + w**2) ** (-(spec.nu + 0.5))


def matern_to_sde(spec: KernelSpec) -> LatentSde:
    """Spectrally factor a Matérn kernel into its companion-form SDE.

    Args:
        spec: Kernel hyperparameters (ν must be 1/2, 3/2 or 5/2)

    Returns:
        LatentSde with stationary covariance from the continuous Lyapunov equation

    Raises:
        ConfigurationError: If ν has no finite-dimensional realization here
    """
    if not any(math.isclose(spec.nu, nu) for nu in SUPPORTED_NU):
        raise ConfigurationError(f"Unsupported Matérn smoothness nu={spec.nu}")

    p = spec.order
    lam = spec.lam
    # (λ + s)^p = Σ_j binom(p, j) λ^(p-j) s^j
    coeffs = np.array([math.comb(p, j) * lam ** (p - j) for j in range(p)])

    A = np.zeros((p, p))
    A[:-1, 1:] = np.eye(p - 1)
    A[-1, :] = -coeffs
    B = np.zeros((p, 1))
    B[-1, 0] = 1.0
    C = np.zeros((1, p))
    C[0, 0] = 1.0
    q = _noise_density(spec)

    Pinf = linalg.solve_continuous_lyapunov(A, -q * (B @ B.T))
    Pinf = 0.5 * (Pinf + Pinf.T)

    logger.debug(f"Matérn nu={spec.nu} -> SDE of order {p}, q={q:.6g}, lambda={lam:.6g}")
    return LatentSde(A=A, B=B, C=C, q=float(q), Pinf=Pinf)


def discretize_exact(sde: LatentSde, dt: float) -> DiscreteLatent:
    """Exact discretization by the Van Loan augmented-matrix exponential.

    Args:
        sde: Continuous latent SDE
        dt: Step in seconds

    Returns:
        DiscreteLatent with symmetric Qd
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    p = sde.p
    block = np.zeros((2 * p, 2 * p))
    block[:p, :p] = -sde.A
    block[:p, p:] = sde.q * (sde.B @ sde.B.T)
    block[p:, p:] = sde.A.T
    phi = linalg.expm(block * dt)

    Ad = phi[p:, p:].T
    Qd = Ad @ phi[:p, p:]
    Qd = 0.5 * (Qd + Qd.T)
    return DiscreteLatent(Ad=Ad, Qd=Qd, dt=float(dt))


def stationary_process_noise(sde: LatentSde, Ad: np.ndarray) -> np.ndarray:
    """Discrete noise covariance implied by stationarity: Pinf − Ad Pinf Adᵀ."""
    Qd = sde.Pinf - Ad @ sde.Pinf @ Ad.T
    return 0.5 * (Qd + Qd.T)


def autocovariance(sde: LatentSde, tau: ArrayLike) -> np.ndarray:
    """Output autocovariance C exp(Aτ) Pinf Cᵀ of the stationary SDE.

    Args:
        sde: Latent SDE
        tau: Non-negative lag(s) in seconds

    Returns:
        Covariance value(s) with the shape of ``tau``
    """
    lags = np.asarray(tau, dtype=float)
    if np.any(lags < 0.0):
        raise ValueError("autocovariance lags must be non-negative")
    flat = [
        float((sde.C @ linalg.expm(sde.A * lag) @ sde.Pinf @ sde.C.T)[0, 0])
        for lag in lags.ravel()
    ]
    return np.array(flat).reshape(lags.shape)


def sample_latent_paths(
    sde: LatentSde,
    dt: float,
    n_steps: int,
    n_paths: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate the exact discrete latent chain from its stationary law.

    Args:
        sde: Latent SDE
        dt: Step in seconds
        n_steps: Number of transitions
        n_paths: Number of independent trajectories
        rng: Random generator

    Returns:
        Array of shape (n_paths, n_steps + 1, p)
    """
    disc = discretize_exact(sde, dt)
    chol_p = psd_cholesky(sde.Pinf)
    chol_q = psd_cholesky(disc.Qd)

    paths = np.empty((n_paths, n_steps + 1, sde.p))
    paths[:, 0] = rng.standard_normal((n_paths, sde.p)) @ chol_p.T
    for k in range(n_steps):
        noise = rng.standard_normal((n_paths, sde.p)) @ chol_q.T
        paths[:, k + 1] = paths[:, k] @ disc.Ad.T + noise
    return paths


def psd_cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with a relative jitter fallback for nearly singular covariances."""
    scale = max(float(np.max(np.abs(np.diag(cov)))), np.finfo(float).tiny)
    for jitter in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            return np.linalg.cholesky(cov + jitter * scale * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None)))
