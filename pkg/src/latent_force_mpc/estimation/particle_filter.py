"""Bootstrap particle filter over the augmented state.

The proposal is the Euler–Maruyama transition of the augmented model and the
weights are the Gaussian measurement likelihoods. Propagation and weighting
are vectorized over particles; all draws of one step come from a single
generator derived from the run seed, so results do not depend on how the
work is split.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from latent_force_mpc.core.errors import FilterDegeneracyError
from latent_force_mpc.dynamics.augmented import AugmentedModel, em_step
from latent_force_mpc.dynamics.measurement import MeasurementModel
from latent_force_mpc.gp.state_space import psd_cholesky

logger = logging.getLogger(__name__)

# log of the smallest positive normal double: below this every likelihood underflows
LOG_TINY = float(np.log(np.finfo(float).tiny))


class ResamplePolicy(str, Enum):
    """When to resample."""

    ALWAYS = "always"
    ESS = "ess"


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted particle approximation of the filtering posterior.

    Attributes:
        states: Augmented-state samples, shape (N_p, n_a)
        weights: Normalized non-negative weights, shape (N_p,)
    """

    states: np.ndarray
    weights: np.ndarray

    @property
    def n_particles(self) -> int:
        return self.states.shape[0]

    @property
    def ess(self) -> float:
        """Effective sample size 1 / Σ wᵢ²."""
        return float(1.0 / np.sum(self.weights**2))


@dataclass(frozen=True)
class Estimate:
    """Gaussian summary of a particle cloud."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def bounds(self, n_sigma: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper n-sigma bands."""
        return self.mean - n_sigma * self.std, self.mean + n_sigma * self.std

    @classmethod
    def exact(cls, xbar: ArrayLike) -> "Estimate":
        """Point estimate with zero covariance (oracle state feedback)."""
        mean = np.asarray(xbar, dtype=float).copy()
        return cls(mean=mean, cov=np.zeros((mean.size, mean.size)))


def estimate_from(cloud: ParticleCloud) -> Estimate:
    """Weighted mean and covariance of a cloud."""
    mean = cloud.weights @ cloud.states
    centered = cloud.states - mean
    cov = (centered * cloud.weights[:, None]).T @ centered
    return Estimate(mean=mean, cov=0.5 * (cov + cov.T))


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: one uniform offset, N evenly spaced positions.

    Args:
        weights: Normalized weights
        rng: Random generator

    Returns:
        Ancestor indices, shape (N,)
    """
    n = len(weights)
    positions = (np.arange(n) + rng.random()) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def pf_init(
    model: AugmentedModel,
    x0_phys: ArrayLike,
    Pinf: np.ndarray,
    n_particles: int,
    rng: np.random.Generator,
    phys_cov: Optional[np.ndarray] = None,
) -> ParticleCloud:
    """Initialize particles at a known physical state with a stationary latent prior.

    Args:
        model: Augmented model
        x0_phys: Physical start state, shape (n_x,)
        Pinf: Stationary latent covariance
        n_particles: Number of particles N_p
        rng: Random generator
        phys_cov: Optional covariance for jittering the physical components

    Returns:
        Uniformly weighted ParticleCloud
    """
    if n_particles < 1:
        raise ValueError(f"n_particles must be >= 1, got {n_particles}")
    states = np.empty((n_particles, model.n_a))
    states[:, : model.n_x] = np.asarray(x0_phys, dtype=float)
    if phys_cov is not None:
        states[:, : model.n_x] += rng.standard_normal((n_particles, model.n_x)) @ psd_cholesky(
            phys_cov
        ).T
    states[:, model.n_x :] = rng.standard_normal((n_particles, model.p)) @ psd_cholesky(Pinf).T
    weights = np.full(n_particles, 1.0 / n_particles)
    logger.debug(f"Initialized {n_particles} particles over {model.n_a} augmented states")
    return ParticleCloud(states=states, weights=weights)


def pf_predict(
    cloud: ParticleCloud,
    model: AugmentedModel,
    u_applied: ArrayLike,
    dt: float,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Propagate every particle through the Euler–Maruyama transition."""
    dbeta = rng.standard_normal(cloud.n_particles) * np.sqrt(model.latent.q * dt)
    states = em_step(model, cloud.states, np.asarray(u_applied, dtype=float), dbeta, dt)
    return ParticleCloud(states=states, weights=cloud.weights)


def pf_update(
    cloud: ParticleCloud,
    measurement: MeasurementModel,
    y: ArrayLike,
    rng: np.random.Generator,
    policy: ResamplePolicy = ResamplePolicy.ALWAYS,
    ess_fraction: float = 0.5,
) -> Tuple[ParticleCloud, Estimate]:
    """Reweight by the measurement likelihood, summarize, and resample.

    Returns:
        Tuple of (posterior cloud, weighted estimate before resampling)

    Raises:
        FilterDegeneracyError: If all likelihoods underflow
    """
    loglik = measurement.log_likelihood(y, cloud.states)
    if not np.any(loglik > LOG_TINY):
        innovation = np.asarray(y, dtype=float) - measurement.h(cloud.states)
        raise FilterDegeneracyError(
            "All particle likelihoods are numerically zero",
            float(np.min(np.linalg.norm(innovation, axis=-1))),
        )

    log_w = np.log(np.clip(cloud.weights, np.finfo(float).tiny, None)) + loglik
    log_w -= special.logsumexp(log_w)
    weights = np.exp(log_w)
    weights /= weights.sum()
    weighted = ParticleCloud(states=cloud.states, weights=weights)
    estimate = estimate_from(weighted)

    ess = weighted.ess
    if policy == ResamplePolicy.ALWAYS or ess < ess_fraction * cloud.n_particles:
        ancestors = systematic_resample(weights, rng)
        n = cloud.n_particles
        weighted = ParticleCloud(states=cloud.states[ancestors], weights=np.full(n, 1.0 / n))
    logger.debug(f"Particle update: ESS before resampling {ess:.1f}/{cloud.n_particles}")
    return weighted, estimate


def pf_step(
    cloud: ParticleCloud,
    model: AugmentedModel,
    measurement: MeasurementModel,
    u_applied: ArrayLike,
    y: ArrayLike,
    dt: float,
    rng: np.random.Generator,
    policy: ResamplePolicy = ResamplePolicy.ALWAYS,
    ess_fraction: float = 0.5,
) -> Tuple[ParticleCloud, Estimate]:
    """One bootstrap filter step: propagate, weight, resample.

    Args:
        cloud: Current posterior particles
        model: Augmented model used as the proposal
        measurement: Measurement model supplying the likelihood
        u_applied: Input applied over the last interval
        y: New measurement
        dt: Step in seconds
        rng: Random generator for this step
        policy: Resampling policy
        ess_fraction: ESS threshold as a fraction of N_p for the ``ess`` policy

    Returns:
        Tuple of (new ParticleCloud, Estimate)
    """
    predicted = pf_predict(cloud, model, u_applied, dt, rng)
    return pf_update(predicted, measurement, y, rng, policy, ess_fraction)
