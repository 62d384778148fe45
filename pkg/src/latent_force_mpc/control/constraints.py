"""State constraints g(x) ≤ 0 on the physical state."""

from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np

from latent_force_mpc.config.schema import StateConstraintsConfig, TrackSpec
from latent_force_mpc.dynamics.bicycle import PX, PY, V
from latent_force_mpc.simulation.track import centerline_slope, make_track


class StateConstraint(ABC):
    """Vector of inequality residuals on the physical state.

    Residuals and Jacobians are vectorized over leading dimensions.
    """

    name: str = "state"

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of residual components."""

    @abstractmethod
    def residuals(self, x: np.ndarray) -> np.ndarray:
        """g(x), shape (..., size); feasible where every entry is ≤ 0."""

    @abstractmethod
    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """∂g/∂x, shape (..., size, n_x)."""

    def violation(self, x: np.ndarray) -> np.ndarray:
        """Largest positive residual, shape (...)."""
        return np.max(np.maximum(self.residuals(x), 0.0), axis=-1)


class _Interval(StateConstraint):
    def __init__(self, index: int, lower: float, upper: float):
        if lower > upper:
            raise ValueError(f"{self.name}: lower bound {lower} exceeds upper bound {upper}")
        self.index = index
        self.lower = lower
        self.upper = upper

    @property
    def size(self) -> int:
        return 2

    def residuals(self, x: np.ndarray) -> np.ndarray:
        value = np.asarray(x, dtype=float)[..., self.index]
        return np.stack([self.lower - value, value - self.upper], axis=-1)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        jac = np.zeros(x.shape[:-1] + (2, x.shape[-1]))
        jac[..., 0, self.index] = -1.0
        jac[..., 1, self.index] = 1.0
        return jac


class VelocityBounds(_Interval):
    """v_min ≤ v ≤ v_max."""

    name = "velocity"

    def __init__(self, v_min: float = 0.0, v_max: float = 8.0, index: int = V):
        super().__init__(index, v_min, v_max)


class PositionBounds(_Interval):
    """x_min ≤ p_x ≤ x_max."""

    name = "position"

    def __init__(self, x_min: float, x_max: float, index: int = PX):
        super().__init__(index, x_min, x_max)


class CorridorBounds(StateConstraint):
    """Keep p_y inside the road corridor tightened by ``margin`` on both sides."""

    name = "corridor"

    def __init__(self, track: TrackSpec, margin: float = 0.0):
        if margin < 0.0 or margin >= track.half_width:
            raise ValueError(f"corridor margin must lie in [0, {track.half_width}), got {margin}")
        self.track = track
        self.margin = margin

    @property
    def size(self) -> int:
        return 2

    def residuals(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lower, upper = make_track(self.track, x[..., PX])
        py = x[..., PY]
        return np.stack([lower + self.margin - py, py - (upper - self.margin)], axis=-1)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        slope = centerline_slope(self.track, x[..., PX])
        jac = np.zeros(x.shape[:-1] + (2, x.shape[-1]))
        jac[..., 0, PX] = slope
        jac[..., 0, PY] = -1.0
        jac[..., 1, PX] = -slope
        jac[..., 1, PY] = 1.0
        return jac


def build_state_constraints(
    cfg: StateConstraintsConfig,
    track: Optional[TrackSpec] = None,
    controller_side: bool = True,
) -> List[StateConstraint]:
    """Instantiate the configured constraint families.

    Args:
        cfg: Constraint description
        track: Track geometry, needed for corridor and position bounds
        controller_side: Apply the corridor tightening margin (False gives the
            true corridor used for evaluation)

    Returns:
        List of StateConstraint
    """
    constraints: List[StateConstraint] = []
    if cfg.velocity is not None:
        constraints.append(VelocityBounds(cfg.velocity.v_min, cfg.velocity.v_max))
    if (cfg.corridor or cfg.position) and track is None:
        raise ValueError("corridor and position bounds need a track")
    if cfg.corridor:
        constraints.append(CorridorBounds(track, cfg.corridor_margin if controller_side else 0.0))
    if cfg.position:
        constraints.append(PositionBounds(track.x_min, track.x_max))
    return constraints
