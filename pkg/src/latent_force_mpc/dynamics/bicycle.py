"""Kinematic bicycle model with an additive disturbance on the velocity equation."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.core.errors import ModelDomainError
from latent_force_mpc.dynamics.base import NominalDynamics

PX, PY, V, PSI = range(4)
ACCEL, STEER = range(2)


def wrap_angle(angle: ArrayLike) -> np.ndarray:
    """Wrap angles to (−π, π]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def slip_angle(delta: ArrayLike) -> np.ndarray:
    """Slip angle α(δ) = arctan(0.5·tan δ)."""
    return np.arctan(0.5 * np.tan(np.asarray(delta, dtype=float)))


@dataclass(frozen=True)
class BicycleState:
    """Physical bicycle state.

    Attributes:
        px: x position (m)
        py: y position (m)
        v: speed (m/s)
        psi: heading (rad, unwrapped internally)
    """

    px: float
    py: float
    v: float
    psi: float

    def to_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.v, self.psi])

    @classmethod
    def from_array(cls, x: ArrayLike) -> "BicycleState":
        px, py, v, psi = (float(value) for value in np.asarray(x, dtype=float)[:4])
        return cls(px=px, py=py, v=v, psi=psi)

    @property
    def heading_wrapped(self) -> float:
        return float(wrap_angle(self.psi))


class KinematicBicycle(NominalDynamics):
    """Kinematic bicycle: state [p_x, p_y, v, ψ], input [a, δ]."""

    def __init__(self, length: float = 0.5):
        """Initialize bicycle.

        Args:
            length: Vehicle length l in meters
        """
        if length <= 0.0:
            raise ValueError(f"vehicle length must be positive, got {length}")
        super().__init__(
            "kinematic_bicycle",
            n_x=4,
            n_u=2,
            state_labels=("px", "py", "v", "psi"),
            input_labels=("accel", "steer"),
        )
        self.length = length

    @property
    def default_channels(self) -> Tuple[int, ...]:
        return (V,)

    def validate_input(self, u: np.ndarray) -> None:
        delta = np.asarray(u)[..., STEER]
        if np.any(np.abs(delta) >= math.pi / 2.0):
            raise ModelDomainError(
                f"steering angle must satisfy |delta| < 90 deg, got max {np.degrees(np.max(np.abs(delta))):.3f} deg"
            )

    def free_drift(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        v, psi = x[..., V], x[..., PSI]
        accel, delta = u[..., ACCEL], u[..., STEER]
        alpha = slip_angle(delta)
        course = psi + alpha

        return np.stack(
            np.broadcast_arrays(
                v * np.cos(course),
                v * np.sin(course),
                accel,
                v / (self.length / 2.0) * np.sin(alpha),
            ),
            axis=-1,
        )

    def free_jacobians(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        v, psi = x[..., V], x[..., PSI]
        delta = u[..., STEER]
        alpha = slip_angle(delta)
        course = psi + alpha
        cos_c, sin_c = np.cos(course), np.sin(course)
        tan_d = np.tan(delta)
        # dα/dδ = 0.5 sec²δ / (1 + 0.25 tan²δ)
        dalpha = 0.5 * (1.0 + tan_d**2) / (1.0 + 0.25 * tan_d**2)
        yaw_gain = 2.0 / self.length

        batch = np.broadcast_shapes(v.shape, delta.shape)
        fx = np.zeros(batch + (4, 4))
        fx[..., PX, V] = cos_c
        fx[..., PX, PSI] = -v * sin_c
        fx[..., PY, V] = sin_c
        fx[..., PY, PSI] = v * cos_c
        fx[..., PSI, V] = yaw_gain * np.sin(alpha)

        fu = np.zeros(batch + (4, 2))
        fu[..., V, ACCEL] = 1.0
        fu[..., PX, STEER] = -v * sin_c * dalpha
        fu[..., PY, STEER] = v * cos_c * dalpha
        fu[..., PSI, STEER] = yaw_gain * v * np.cos(alpha) * dalpha
        return fx, fu


def bicycle_drift(
    state: BicycleState,
    control: ArrayLike,
    w: float,
    length: float = 0.5,
) -> np.ndarray:
    """Drift of the kinematic bicycle with the disturbance on the velocity equation.

    Args:
        state: Physical state
        control: Input (a, δ)
        w: Disturbance value (m/s²)
        length: Vehicle length in meters

    Returns:
        [ṗ_x, ṗ_y, v̇, ψ̇]
    """
    model = KinematicBicycle(length=length)
    return model.drift(state.to_array(), np.asarray(control, dtype=float), np.atleast_1d(w))
