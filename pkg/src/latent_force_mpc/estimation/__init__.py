"""State estimation for the augmented latent force model."""

from latent_force_mpc.estimation.particle_filter import (
    Estimate,
    ParticleCloud,
    ResamplePolicy,
    estimate_from,
    pf_init,
    pf_predict,
    pf_step,
    pf_update,
    systematic_resample,
)

__all__ = [
    "Estimate",
    "ParticleCloud",
    "ResamplePolicy",
    "estimate_from",
    "pf_init",
    "pf_predict",
    "pf_step",
    "pf_update",
    "systematic_resample",
]
