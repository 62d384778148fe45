"""Quadratic scenario cost on the physical states."""

from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.config.schema import MpcConfig


def scenario_objective(trajs: np.ndarray, inputs: ArrayLike, cfg: MpcConfig) -> float:
    """Sum over scenarios of the stage and terminal costs.

    J = Σᵢ [Σₖ₌₀^{N-1} (eᵢₖᵀQeᵢₖ + uₖᵀRuₖ) + eᵢₙᵀQf eᵢₙ],  e = x − x_g

    The latent block of the augmented state does not enter the cost.

    Args:
        trajs: Scenario trajectories, shape (Ns, N+1, n_a)
        inputs: Input sequence, shape (N, n_u)
        cfg: MPC settings with Q, Qf, R and x_goal

    Returns:
        Scalar cost
    """
    Q, Qf, R = cfg.weights()
    inputs = np.asarray(inputs, dtype=float).reshape(-1, cfg.n_u)
    err = trajs[..., : cfg.n_x] - cfg.goal()
    stage = np.einsum("ski,ij,skj->", err[:, :-1], Q, err[:, :-1])
    terminal = np.einsum("si,ij,sj->", err[:, -1], Qf, err[:, -1])
    effort = trajs.shape[0] * np.einsum("ki,ij,kj->", inputs, R, inputs)
    return float(stage + terminal + effort)


def scenario_objective_grad(
    trajs: np.ndarray, inputs: ArrayLike, cfg: MpcConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`scenario_objective`.

    Returns:
        Tuple of (∂J/∂x̄ with shape (Ns, N+1, n_a), explicit ∂J/∂u with shape (N, n_u))
    """
    Q, Qf, R = cfg.weights()
    inputs = np.asarray(inputs, dtype=float).reshape(-1, cfg.n_u)
    err = trajs[..., : cfg.n_x] - cfg.goal()
    cotangents = np.zeros_like(trajs)
    cotangents[:, :-1, : cfg.n_x] = 2.0 * err[:, :-1] @ Q
    cotangents[:, -1, : cfg.n_x] = 2.0 * err[:, -1] @ Qf
    input_grad = 2.0 * trajs.shape[0] * inputs @ R
    return cotangents, input_grad
