"""Pytest configuration and shared fixtures."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from latent_force_mpc.config.schema import (
    EstimatorMode,
    ExperimentConfig,
    MpcConfig,
    StateConstraintsConfig,
    default_config,
)
from latent_force_mpc.dynamics.augmented import augment
from latent_force_mpc.dynamics.bicycle import KinematicBicycle
from latent_force_mpc.dynamics.integrator import ScalarIntegrator
from latent_force_mpc.gp.kernels import KernelSpec
from latent_force_mpc.gp.state_space import matern_to_sde


@pytest.fixture
def temp_out_dir():
    """Create temporary output directory."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def case_kernel():
    """Matérn 5/2 kernel with σ² = 4, ℓ = 4."""
    return KernelSpec(sigma2=4.0, ell=4.0, nu=2.5)


@pytest.fixture
def bicycle_model(case_kernel):
    """Kinematic bicycle augmented with the order-3 latent force on v."""
    return augment(KinematicBicycle(length=0.5), matern_to_sde(case_kernel))


@pytest.fixture
def integrator_model():
    """Scalar integrator with an Ornstein-Uhlenbeck (ν = 1/2) latent force."""
    return augment(ScalarIntegrator(), matern_to_sde(KernelSpec(sigma2=1.0, ell=1.0, nu=0.5)))


@pytest.fixture
def bicycle_mpc_config():
    """Case-study MPC settings with few scenarios."""
    return MpcConfig(Ns=5)


@pytest.fixture
def integrator_mpc_config():
    """One-state, one-input MPC settings without state constraints."""
    return MpcConfig(
        N=1,
        Ns=1,
        dt=0.2,
        Q=[[1.0]],
        Qf=[[2.0]],
        R=[[0.5]],
        x_goal=[0.0],
        u_lower=[-100.0],
        u_upper=[100.0],
        state_constraints=StateConstraintsConfig.none(),
    )


@pytest.fixture
def small_config():
    """Case study shrunk to a few cheap steps with oracle state feedback."""
    data = default_config().model_dump(mode="json")
    data["mpc"]["Ns"] = 4
    data["mpc"]["solver"]["max_iters"] = 30
    data["filter"]["mode"] = EstimatorMode.ORACLE.value
    data["filter"]["n_particles"] = 200
    data["run"]["max_steps"] = 3
    return ExperimentConfig.model_validate(data)


@pytest.fixture
def small_pf_config(small_config):
    """Like ``small_config`` but estimating with a small particle filter."""
    data = small_config.model_dump(mode="json")
    data["filter"]["mode"] = EstimatorMode.PARTICLE_FILTER.value
    return ExperimentConfig.model_validate(data)


@pytest.fixture
def rng():
    """Seeded generator."""
    return np.random.default_rng(12345)
