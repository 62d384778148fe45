"""Augmented latent force model x̄ = [xᵀ zᵀ]ᵀ and its Euler–Maruyama step."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.core.errors import ConfigurationError, NumericalBlowUpError
from latent_force_mpc.dynamics.base import NominalDynamics
from latent_force_mpc.gp.state_space import LatentSde

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentedModel:
    """Nominal dynamics composed with a latent SDE.

    f̄([x; z], u) = [f(x, u, Cz); A z],  B̄ = [0; B]

    Attributes:
        nominal: Physical dynamics
        latent: Latent SDE of the disturbance
        disturbance_map: Physical state equation receiving each disturbance component
    """

    nominal: NominalDynamics
    latent: LatentSde
    disturbance_map: Tuple[int, ...]
    _coupling: np.ndarray = field(init=False, repr=False, compare=False)
    _b_bar: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        E = self.nominal.disturbance_matrix(self.disturbance_map)
        object.__setattr__(self, "_coupling", E @ self.latent.C)
        b_bar = np.zeros(self.n_a)
        b_bar[self.n_x :] = self.latent.B[:, 0]
        object.__setattr__(self, "_b_bar", b_bar)

    @property
    def n_x(self) -> int:
        return self.nominal.n_x

    @property
    def n_u(self) -> int:
        return self.nominal.n_u

    @property
    def p(self) -> int:
        return self.latent.p

    @property
    def n_a(self) -> int:
        """Augmented state dimension n_x + p."""
        return self.n_x + self.latent.p

    @property
    def B_bar(self) -> np.ndarray:
        """Noise input vector [0_{n_x}; B], shape (n_a,)."""
        return self._b_bar

    @property
    def state_labels(self) -> Tuple[str, ...]:
        return self.nominal.state_labels + tuple(f"z{i}" for i in range(self.p))

    def disturbance(self, xbar: np.ndarray) -> np.ndarray:
        """Latent force w = C z, shape (..., n_w)."""
        return np.asarray(xbar)[..., self.n_x :] @ self.latent.C.T

    def drift(self, xbar: ArrayLike, u: ArrayLike) -> np.ndarray:
        """Augmented drift f̄(x̄, u), vectorized over leading dimensions."""
        xbar = np.asarray(xbar, dtype=float)
        x, z = xbar[..., : self.n_x], xbar[..., self.n_x :]
        fx = self.nominal.drift(x, u, z @ self.latent.C.T, self.disturbance_map)
        fz = z @ self.latent.A.T
        batch = np.broadcast_shapes(fx.shape[:-1], fz.shape[:-1])
        fx = np.broadcast_to(fx, batch + fx.shape[-1:])
        fz = np.broadcast_to(fz, batch + fz.shape[-1:])
        return np.concatenate([fx, fz], axis=-1)

    def drift_jacobians(self, xbar: ArrayLike, u: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """Jacobians of the augmented drift.

        The latent rows of ∂f̄/∂u are identically zero: z is uncontrollable.

        Returns:
            Tuple of (∂f̄/∂x̄ with shape (..., n_a, n_a), ∂f̄/∂u with shape (..., n_a, n_u))
        """
        xbar = np.asarray(xbar, dtype=float)
        u = np.asarray(u, dtype=float)
        fx_phys, fu_phys = self.nominal.free_jacobians(xbar[..., : self.n_x], u)
        batch = fx_phys.shape[:-2]

        fx = np.zeros(batch + (self.n_a, self.n_a))
        fx[..., : self.n_x, : self.n_x] = fx_phys
        fx[..., : self.n_x, self.n_x :] = self._coupling
        fx[..., self.n_x :, self.n_x :] = self.latent.A

        fu = np.zeros(batch + (self.n_a, self.n_u))
        fu[..., : self.n_x, :] = fu_phys
        return fx, fu


def augment(
    nominal: NominalDynamics,
    latent: LatentSde,
    disturbance_map: Optional[Sequence[int]] = None,
) -> AugmentedModel:
    """Concatenate physical and latent systems into one augmented model.

    Args:
        nominal: Physical dynamics
        latent: Latent SDE (single output)
        disturbance_map: State equation per disturbance component
            (defaults to the nominal model's ``default_channels``)

    Returns:
        AugmentedModel

    Raises:
        ConfigurationError: On an out-of-range target or a dimension mismatch
    """
    mapping = tuple(nominal.default_channels if disturbance_map is None else disturbance_map)
    n_w = latent.C.shape[0]
    if len(mapping) != n_w:
        raise ConfigurationError(
            f"disturbance map has {len(mapping)} targets but the latent output has dimension {n_w}"
        )
    for index in mapping:
        if not 0 <= int(index) < nominal.n_x:
            raise ConfigurationError(
                f"disturbance map target {index} outside the {nominal.n_x} states of {nominal.name}"
            )
    model = AugmentedModel(nominal=nominal, latent=latent, disturbance_map=tuple(int(i) for i in mapping))
    logger.debug(
        f"Augmented {nominal.name} with order-{latent.p} latent force on "
        f"{[nominal.state_labels[i] for i in model.disturbance_map]} (n_a={model.n_a})"
    )
    return model


def em_step(
    model: AugmentedModel,
    xbar: ArrayLike,
    u: ArrayLike,
    dbeta: ArrayLike,
    dt: float,
) -> np.ndarray:
    """One Euler–Maruyama step x̄ + f̄(x̄, u)·dt + B̄·dβ.

    Args:
        model: Augmented model
        xbar: Augmented states, shape (..., n_a)
        u: Inputs, shape (..., n_u)
        dbeta: Brownian increments, one scalar per batch element, shape (...)
        dt: Step in seconds

    Returns:
        Next augmented states, shape (..., n_a)

    Raises:
        NumericalBlowUpError: If any component of the result is non-finite
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    xbar = np.asarray(xbar, dtype=float)
    nxt = xbar + model.drift(xbar, u) * dt + np.asarray(dbeta, dtype=float)[..., None] * model.B_bar
    if not np.all(np.isfinite(nxt)):
        bad = np.flatnonzero(~np.all(np.isfinite(nxt.reshape(-1, model.n_a)), axis=0))
        raise NumericalBlowUpError(
            "Euler-Maruyama step diverged", [model.state_labels[i] for i in bad]
        )
    return nxt
