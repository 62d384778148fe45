"""Noise scenarios, scenario rollouts, and the reverse (adjoint) sweep."""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.config.schema import MpcConfig
from latent_force_mpc.dynamics.augmented import AugmentedModel, em_step
from latent_force_mpc.gp.state_space import LatentSde

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioSet:
    """Sampled Brownian increments for every scenario and horizon step.

    Attributes:
        draws: dβ samples, shape (Ns, N)
        dt: Step the increments were drawn for
        seed: Seed the draws came from, when known
    """

    draws: np.ndarray
    dt: float
    seed: Optional[int] = None

    @property
    def n_scenarios(self) -> int:
        return self.draws.shape[0]

    @property
    def horizon(self) -> int:
        return self.draws.shape[1]

    @classmethod
    def zeros(cls, n_scenarios: int, horizon: int, dt: float) -> "ScenarioSet":
        """Noise-free scenarios."""
        return cls(draws=np.zeros((n_scenarios, horizon)), dt=dt)


def sample_scenarios(
    latent: LatentSde,
    cfg: MpcConfig,
    rng: Union[np.random.Generator, int],
) -> ScenarioSet:
    """Draw Ns·N independent increments dβ ~ N(0, q·Δt).

    Args:
        latent: Latent SDE supplying q
        cfg: MPC settings (Ns, N, dt)
        rng: Generator, or an integer seed

    Returns:
        ScenarioSet
    """
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    draws = rng.standard_normal((cfg.Ns, cfg.N)) * np.sqrt(latent.q * cfg.dt)
    return ScenarioSet(draws=draws, dt=cfg.dt, seed=seed)


def rollout(
    model: AugmentedModel,
    xbar0: ArrayLike,
    inputs: ArrayLike,
    scenarios: ScenarioSet,
) -> np.ndarray:
    """Propagate a shared initial state through every scenario.

    Args:
        model: Augmented model
        xbar0: Initial augmented state, shape (n_a,)
        inputs: Input sequence, shape (N, n_u)
        scenarios: Increments, horizon N

    Returns:
        Trajectories, shape (Ns, N+1, n_a)
    """
    inputs = np.asarray(inputs, dtype=float).reshape(-1, model.n_u)
    if inputs.shape[0] != scenarios.horizon:
        raise ValueError(f"{inputs.shape[0]} inputs for a horizon of {scenarios.horizon}")
    n_s, horizon = scenarios.draws.shape
    traj = np.empty((n_s, horizon + 1, model.n_a))
    traj[:, 0, :] = np.asarray(xbar0, dtype=float)
    for k in range(horizon):
        traj[:, k + 1, :] = em_step(model, traj[:, k, :], inputs[k], scenarios.draws[:, k], scenarios.dt)
    return traj


def rollout_vjp(
    model: AugmentedModel,
    traj: np.ndarray,
    inputs: ArrayLike,
    state_cotangents: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Reverse sweep through the Euler–Maruyama recursion.

    Given cotangents G_k = ∂J/∂x̄_k of a scalar J on every scenario
    trajectory, returns ∂J/∂u_k accumulated over scenarios in index order.

    Args:
        model: Augmented model the trajectories came from
        traj: Trajectories, shape (Ns, N+1, n_a)
        inputs: Inputs, shape (N, n_u)
        state_cotangents: G, shape (Ns, N+1, n_a); the k=0 slice is ignored
        dt: Step in seconds

    Returns:
        Gradient with respect to the inputs, shape (N, n_u)
    """
    inputs = np.asarray(inputs, dtype=float).reshape(-1, model.n_u)
    horizon = inputs.shape[0]
    grad = np.zeros_like(inputs)
    adjoint = np.array(state_cotangents[:, horizon, :], dtype=float)
    for k in range(horizon - 1, -1, -1):
        fx, fu = model.drift_jacobians(traj[:, k, :], inputs[k])
        grad[k] = dt * np.einsum("sau,sa->u", fu, adjoint)
        adjoint = adjoint + dt * np.einsum("sab,sa->sb", fx, adjoint)
        if k > 0:
            adjoint += state_cotangents[:, k, :]
    return grad
