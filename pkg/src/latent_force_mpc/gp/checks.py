"""Numerical checks that a state-space realization reproduces its Matérn kernel."""

from dataclasses import dataclass
from typing import List

import numpy as np

from latent_force_mpc.gp.kernels import SUPPORTED_NU, KernelSpec, matern_eval, matern_eval_bessel
from latent_force_mpc.gp.state_space import (
    autocovariance,
    discretize_exact,
    matern_to_sde,
    stationary_process_noise,
)

LAG_GRID_STEPS = 51
EQUIVALENCE_TOL = 1e-8
BESSEL_TOL = 1e-10
VARIANCE_TOL = 1e-9
DISCRETE_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    nu: float
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error < self.tolerance)


def lag_grid(spec: KernelSpec) -> np.ndarray:
    """τ ∈ {0, 0.1ℓ, …, 5ℓ}."""
    return 0.1 * spec.ell * np.arange(LAG_GRID_STEPS)


def equivalence_checks(spec: KernelSpec, dt: float = 0.2) -> List[CheckResult]:
    """Run every check for ``spec``'s (σ², ℓ) at each supported ν.

    Args:
        spec: Kernel whose σ² and ℓ are used
        dt: Step for the discretization check

    Returns:
        One CheckResult per (check, ν)
    """
    results = []
    for nu in SUPPORTED_NU:
        kernel = KernelSpec(sigma2=spec.sigma2, ell=spec.ell, nu=nu)
        sde = matern_to_sde(kernel)
        taus = lag_grid(kernel)

        analytic = np.max(np.abs(autocovariance(sde, taus) - matern_eval(kernel, taus))) / kernel.sigma2
        results.append(CheckResult("ssm autocovariance vs kernel", nu, float(analytic), EQUIVALENCE_TOL))

        variance = abs(sde.Pinf[0, 0] - kernel.sigma2) / kernel.sigma2
        results.append(CheckResult("stationary variance", nu, float(variance), VARIANCE_TOL))

        closed = matern_eval(kernel, taus[1:])
        bessel = matern_eval_bessel(kernel, taus[1:])
        relative = np.max(np.abs(closed - bessel) / np.abs(bessel))
        results.append(CheckResult("closed form vs bessel", nu, float(relative), BESSEL_TOL))

        disc = discretize_exact(sde, dt)
        discrete = np.max(np.abs(disc.Qd - stationary_process_noise(sde, disc.Ad))) / kernel.sigma2
        results.append(CheckResult("van loan vs lyapunov Qd", nu, float(discrete), DISCRETE_TOL))
    return results
