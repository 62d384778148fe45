"""Base class for nominal (physical) dynamics."""

import logging
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class NominalDynamics(ABC):
    """Abstract continuous-time physical dynamics dx/dt = f(x, u, w).

    Subclasses implement the disturbance-free drift and its Jacobians; the
    disturbance w enters additively on the state equations listed in
    ``channels`` (one state index per disturbance component). All methods are
    vectorized over leading batch dimensions.
    """

    def __init__(
        self,
        name: str,
        n_x: int,
        n_u: int,
        state_labels: Sequence[str],
        input_labels: Optional[Sequence[str]] = None,
    ):
        """Initialize dynamics.

        Args:
            name: Model name
            n_x: Physical state dimension
            n_u: Input dimension
            state_labels: Human-readable name of each state
            input_labels: Name of each input (defaults to u0, u1, ...)
        """
        if len(state_labels) != n_x:
            raise ValueError(f"{name}: {len(state_labels)} labels for {n_x} states")
        input_labels = tuple(f"u{i}" for i in range(n_u)) if input_labels is None else input_labels
        if len(input_labels) != n_u:
            raise ValueError(f"{name}: {len(input_labels)} labels for {n_u} inputs")
        self.name = name
        self.n_x = n_x
        self.n_u = n_u
        self.state_labels = tuple(state_labels)
        self.input_labels = tuple(input_labels)
        logger.debug(f"Initialized {name} dynamics (n_x={n_x}, n_u={n_u})")

    @property
    @abstractmethod
    def default_channels(self) -> Tuple[int, ...]:
        """State equations that receive the disturbance by default."""

    @abstractmethod
    def free_drift(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Drift with zero disturbance.

        Args:
            x: States, shape (..., n_x)
            u: Inputs, shape (..., n_u), broadcast against ``x``

        Returns:
            dx/dt, shape (..., n_x)
        """

    @abstractmethod
    def free_jacobians(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Jacobians of :meth:`free_drift`.

        Returns:
            Tuple of (∂f/∂x with shape (..., n_x, n_x), ∂f/∂u with shape (..., n_x, n_u))
        """

    def validate_input(self, u: np.ndarray) -> None:
        """Raise if ``u`` lies outside the domain where the model is defined."""

    def disturbance_matrix(self, channels: Sequence[int]) -> np.ndarray:
        """Selection matrix E (n_x × n_w) placing w on the given state equations."""
        E = np.zeros((self.n_x, len(channels)))
        for j, index in enumerate(channels):
            E[index, j] = 1.0
        return E

    def drift(
        self,
        x: np.ndarray,
        u: np.ndarray,
        w: np.ndarray,
        channels: Optional[Sequence[int]] = None,
    ) -> np.ndarray:
        """Full drift f(x, u, w) = f₀(x, u) + E w.

        Args:
            x: States, shape (..., n_x)
            u: Inputs, shape (..., n_u)
            w: Disturbance, shape (..., n_w)
            channels: Disturbed state equations (defaults to ``default_channels``)

        Returns:
            dx/dt, shape (..., n_x)
        """
        channels = self.default_channels if channels is None else tuple(channels)
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        self.validate_input(u)
        return self.free_drift(x, u) + w @ self.disturbance_matrix(channels).T
