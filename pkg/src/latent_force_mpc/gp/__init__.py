"""Gaussian process kernels and their state-space realizations."""

from latent_force_mpc.gp.kernels import (
    KernelSpec,
    GramMatrix,
    matern_eval,
    matern_eval_bessel,
    gram_matrix,
    gp_posterior,
)
from latent_force_mpc.gp.state_space import (
    LatentSde,
    DiscreteLatent,
    spectral_density,
    matern_to_sde,
    discretize_exact,
    stationary_process_noise,
    autocovariance,
    sample_latent_paths,
    psd_cholesky,
)
from latent_force_mpc.gp.checks import CheckResult, equivalence_checks

__all__ = [
    "KernelSpec",
    "GramMatrix",
    "matern_eval",
    "matern_eval_bessel",
    "gram_matrix",
    "gp_posterior",
    "LatentSde",
    "DiscreteLatent",
    "spectral_density",
    "matern_to_sde",
    "discretize_exact",
    "stationary_process_noise",
    "autocovariance",
    "sample_latent_paths",
    "psd_cholesky",
    "CheckResult",
    "equivalence_checks",
]
