"""Nominal dynamics, the augmented latent force model, and measurements."""

from latent_force_mpc.dynamics.base import NominalDynamics
from latent_force_mpc.dynamics.bicycle import (
    BicycleState,
    KinematicBicycle,
    bicycle_drift,
    slip_angle,
    wrap_angle,
)
from latent_force_mpc.dynamics.integrator import ScalarIntegrator
from latent_force_mpc.dynamics.augmented import AugmentedModel, augment, em_step
from latent_force_mpc.dynamics.measurement import MeasurementModel, measure

__all__ = [
    "NominalDynamics",
    "BicycleState",
    "KinematicBicycle",
    "bicycle_drift",
    "slip_angle",
    "wrap_angle",
    "ScalarIntegrator",
    "AugmentedModel",
    "augment",
    "em_step",
    "MeasurementModel",
    "measure",
]
