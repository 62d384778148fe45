"""Scalar integrator ẋ = u + w, the smallest latent force model."""

from typing import Tuple

import numpy as np

from latent_force_mpc.dynamics.base import NominalDynamics


class ScalarIntegrator(NominalDynamics):
    """Single integrator driven by the input and the disturbance."""

    def __init__(self) -> None:
        super().__init__("scalar_integrator", n_x=1, n_u=1, state_labels=("x",))

    @property
    def default_channels(self) -> Tuple[int, ...]:
        return (0,)

    def free_drift(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(u, np.broadcast_shapes(x.shape, u.shape)).copy()

    def free_jacobians(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        batch = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1])
        return np.zeros(batch + (1, 1)), np.ones(batch + (1, 1))
