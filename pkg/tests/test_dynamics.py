"""Tests for nominal dynamics, augmentation, Euler–Maruyama and measurements."""

import numpy as np
import pytest

from latent_force_mpc.core.errors import ConfigurationError, ModelDomainError, NumericalBlowUpError
from latent_force_mpc.dynamics.augmented import augment, em_step
from latent_force_mpc.dynamics.bicycle import (
    BicycleState,
    KinematicBicycle,
    bicycle_drift,
    slip_angle,
    wrap_angle,
)
from latent_force_mpc.dynamics.integrator import ScalarIntegrator
from latent_force_mpc.dynamics.measurement import MeasurementModel, measure
from latent_force_mpc.gp.kernels import KernelSpec
from latent_force_mpc.gp.state_space import matern_to_sde


def finite_difference_jacobians(f, x, u, h=1e-6):
    """Central-difference Jacobians of f(x, u)."""
    fx = np.column_stack([(f(x + h * e, u) - f(x - h * e, u)) / (2 * h) for e in np.eye(len(x))])
    fu = np.column_stack([(f(x, u + h * e) - f(x, u - h * e)) / (2 * h) for e in np.eye(len(u))])
    return fx, fu


class TestKinematicBicycle:
    """Test the bicycle drift."""

    def test_straight_line_motion(self):
        """Test v = 1, ψ = 0, zero input, zero disturbance moves along x."""
        drift = bicycle_drift(BicycleState(0.0, 0.0, 1.0, 0.0), [0.0, 0.0], 0.0)
        np.testing.assert_allclose(drift, [1.0, 0.0, 0.0, 0.0], atol=1e-15)

    def test_slip_angle_at_steering_limit(self):
        """Test α(25°) = arctan(0.5·tan 25°)."""
        alpha = float(slip_angle(np.radians(25.0)))
        assert alpha == pytest.approx(np.arctan(0.5 * np.tan(np.radians(25.0))), rel=1e-12)
        assert alpha == pytest.approx(0.22906, abs=1e-4)

    def test_acceleration_cancels_disturbance(self):
        """Test a = −w leaves v̇ = 0."""
        drift = bicycle_drift(BicycleState(3.0, 1.0, 2.0, 0.4), [1.7, 0.1], -1.7)
        assert drift[2] == pytest.approx(0.0, abs=1e-15)

    def test_heading_periodic(self):
        """Test the drift is 2π-periodic in ψ."""
        model = KinematicBicycle()
        x = np.array([1.0, 2.0, 3.0, 0.3])
        shifted = x + np.array([0.0, 0.0, 0.0, 2.0 * np.pi])
        np.testing.assert_allclose(
            model.drift(x, [0.5, 0.2], [0.1]), model.drift(shifted, [0.5, 0.2], [0.1]), atol=1e-12
        )

    def test_steering_domain(self):
        """Test |δ| ≥ 90° is rejected."""
        model = KinematicBicycle()
        with pytest.raises(ModelDomainError):
            model.drift(np.zeros(4), [0.0, np.pi / 2.0], [0.0])

    def test_jacobians_match_finite_differences(self):
        """Test analytic Jacobians of the free drift."""
        model = KinematicBicycle(length=0.5)
        x = np.array([1.0, -2.0, 3.5, 0.7])
        u = np.array([0.4, 0.25])
        fx, fu = model.free_jacobians(x, u)
        fx_fd, fu_fd = finite_difference_jacobians(model.free_drift, x, u)
        np.testing.assert_allclose(fx, fx_fd, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(fu, fu_fd, rtol=1e-6, atol=1e-8)

    def test_vectorized(self):
        """Test batch evaluation matches row-by-row evaluation."""
        model = KinematicBicycle()
        rng = np.random.default_rng(0)
        x = rng.normal(size=(5, 4))
        u = rng.uniform(-0.3, 0.3, size=(5, 2))
        batch = model.free_drift(x, u)
        for i in range(5):
            np.testing.assert_allclose(batch[i], model.free_drift(x[i], u[i]))

    def test_invalid_length(self):
        """Test non-positive vehicle length is rejected."""
        with pytest.raises(ValueError):
            KinematicBicycle(length=0.0)

    def test_labels(self):
        """Test state and input names."""
        model = KinematicBicycle()
        assert model.state_labels == ("px", "py", "v", "psi")
        assert model.input_labels == ("accel", "steer")

    def test_wrap_angle(self):
        """Test wrapping to (−π, π]."""
        np.testing.assert_allclose(wrap_angle([3.0 * np.pi, -np.pi, 0.5]), [np.pi, np.pi, 0.5])
        assert BicycleState(0.0, 0.0, 0.0, 2.0 * np.pi + 0.1).heading_wrapped == pytest.approx(0.1)


class TestAugment:
    """Test augmentation with the latent SDE."""

    def test_dimensions(self, bicycle_model):
        """Test n_a = n_x + p."""
        assert bicycle_model.n_a == 7
        assert bicycle_model.state_labels == ("px", "py", "v", "psi", "z0", "z1", "z2")
        np.testing.assert_array_equal(bicycle_model.B_bar, [0, 0, 0, 0, 0, 0, 1])

    def test_zero_latent_reduces_to_nominal(self, bicycle_model):
        """Test z = 0 gives the nominal drift and zero latent drift."""
        x = np.array([1.0, 2.0, 3.0, 0.2])
        u = np.array([0.5, 0.1])
        drift = bicycle_model.drift(np.concatenate([x, np.zeros(3)]), u)
        np.testing.assert_allclose(drift[:4], KinematicBicycle().free_drift(x, u))
        np.testing.assert_array_equal(drift[4:], np.zeros(3))

    def test_latent_uncontrollable(self, bicycle_model):
        """Test ∂ż/∂u ≡ 0."""
        xbar = np.array([1.0, 2.0, 3.0, 0.2, 0.5, -0.1, 0.3])
        _, fu = bicycle_model.drift_jacobians(xbar, np.array([0.5, 0.1]))
        np.testing.assert_array_equal(fu[4:], np.zeros((3, 2)))

    def test_augmented_jacobians(self, bicycle_model):
        """Test augmented Jacobians against finite differences."""
        xbar = np.array([1.0, 2.0, 3.0, 0.2, 0.5, -0.1, 0.3])
        u = np.array([0.5, 0.1])
        fx, fu = bicycle_model.drift_jacobians(xbar, u)
        fx_fd, fu_fd = finite_difference_jacobians(bicycle_model.drift, xbar, u)
        np.testing.assert_allclose(fx, fx_fd, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(fu, fu_fd, rtol=1e-6, atol=1e-8)

    def test_disturbance_enters_velocity(self, bicycle_model):
        """Test w = z0 drives v̇ only."""
        base = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        pushed = base.copy()
        pushed[4] = 2.0
        delta = bicycle_model.drift(pushed, np.zeros(2)) - bicycle_model.drift(base, np.zeros(2))
        np.testing.assert_allclose(delta[:4], [0.0, 0.0, 2.0, 0.0])

    def test_out_of_range_target(self, case_kernel):
        """Test a disturbance map outside the physical states."""
        with pytest.raises(ConfigurationError):
            augment(KinematicBicycle(), matern_to_sde(case_kernel), disturbance_map=[7])

    def test_dimension_mismatch(self, case_kernel):
        """Test a map with the wrong number of targets."""
        with pytest.raises(ConfigurationError):
            augment(KinematicBicycle(), matern_to_sde(case_kernel), disturbance_map=[2, 3])


class TestEmStep:
    """Test the Euler–Maruyama transition."""

    def test_fixed_point(self, integrator_model):
        """Test zero input, zero latent and zero noise stays put."""
        xbar = np.array([3.0, 0.0])
        np.testing.assert_array_equal(em_step(integrator_model, xbar, [0.0], 0.0, 0.2), xbar)

    def test_acceleration_from_rest(self, bicycle_model):
        """Test a = 5 m/s² over dt = 0.2 gives v = 1.0."""
        nxt = em_step(bicycle_model, np.zeros(7), np.array([5.0, 0.0]), 0.0, 0.2)
        assert nxt[2] == pytest.approx(1.0)
        np.testing.assert_array_equal(nxt[[0, 1, 3]], np.zeros(3))

    def test_linear_in_noise(self, bicycle_model):
        """Test the increment is affine in dβ along B̄."""
        xbar = np.array([1.0, 0.5, 2.0, 0.1, 0.3, 0.0, -0.2])
        u = np.array([0.2, 0.05])
        base = em_step(bicycle_model, xbar, u, 0.0, 0.2)
        np.testing.assert_allclose(em_step(bicycle_model, xbar, u, 0.7, 0.2) - base, 0.7 * bicycle_model.B_bar)
        np.testing.assert_allclose(
            em_step(bicycle_model, xbar, u, -1.4, 0.2) - base, -1.4 * bicycle_model.B_bar, atol=1e-15
        )

    def test_batched_noise(self, bicycle_model):
        """Test a batch of particles with one increment each."""
        states = np.zeros((4, 7))
        dbeta = np.array([0.0, 1.0, 2.0, 3.0])
        nxt = em_step(bicycle_model, states, np.zeros(2), dbeta, 0.2)
        np.testing.assert_allclose(nxt[:, 6], dbeta)

    def test_blow_up_names_offending_states(self, bicycle_model):
        """Test a non-finite result raises with the offending labels."""
        xbar = np.zeros(7)
        xbar[2] = np.inf
        with pytest.raises(NumericalBlowUpError) as info:
            em_step(bicycle_model, xbar, np.zeros(2), 0.0, 0.2)
        assert "v" in info.value.offending

    def test_zero_noise_matches_forward_euler(self, bicycle_model):
        """Test 1000 noiseless steps against an independent forward-Euler loop."""
        dt = 0.01
        u = np.array([0.3, 0.1])
        lat = bicycle_model.latent
        xbar = np.array([0.0, 0.0, 1.0, 0.0, 0.5, -0.2, 0.1])

        px, py, v, psi = 0.0, 0.0, 1.0, 0.0
        z = np.array([0.5, -0.2, 0.1])
        alpha = np.arctan(0.5 * np.tan(u[1]))
        for _ in range(1000):
            xbar = em_step(bicycle_model, xbar, u, 0.0, dt)
            d_px = v * np.cos(psi + alpha)
            d_py = v * np.sin(psi + alpha)
            d_v = u[0] + z[0]
            d_psi = v / 0.25 * np.sin(alpha)
            px, py, v, psi = px + d_px * dt, py + d_py * dt, v + d_v * dt, psi + d_psi * dt
            z = z + lat.A @ z * dt
        np.testing.assert_allclose(xbar, np.concatenate([[px, py, v, psi], z]), rtol=1e-9, atol=1e-9)

    def test_non_positive_step(self, integrator_model):
        """Test dt must be positive."""
        with pytest.raises(ValueError):
            em_step(integrator_model, np.zeros(2), [0.0], 0.0, 0.0)


class TestScalarIntegrator:
    """Test the one-state model."""

    def test_drift(self, integrator_model):
        """Test ẋ = u + w and ż = −z/ℓ."""
        drift = integrator_model.drift(np.array([2.0, 0.5]), np.array([1.0]))
        np.testing.assert_allclose(drift, [1.5, -0.5])

    def test_labels(self):
        """Test default input label."""
        model = ScalarIntegrator()
        assert model.state_labels == ("x",)
        assert model.input_labels == ("u0",)


class TestMeasurement:
    """Test the measurement model."""

    def test_selects_physical_states(self):
        """Test h picks the observed components and never the latent ones."""
        model = MeasurementModel.diagonal([0, 1, 2, 3], [0.05, 0.05, 0.05, 0.01])
        xbar = np.array([1.0, 2.0, 3.0, 4.0, 9.0, 9.0, 9.0])
        np.testing.assert_array_equal(model.h(xbar), [1.0, 2.0, 3.0, 4.0])

    def test_tiny_noise(self):
        """Test near-noiseless measurements equal h(x̄)."""
        model = MeasurementModel.diagonal([0, 1], [1e-12, 1e-12])
        y = measure(model, np.array([1.0, -2.0, 5.0]), np.random.default_rng(0))
        np.testing.assert_allclose(y, [1.0, -2.0], atol=1e-9)

    def test_noise_covariance(self):
        """Test the empirical covariance of 1e5 draws against R_v."""
        std = np.array([0.05, 0.05, 0.05, 0.01])
        model = MeasurementModel.diagonal([0, 1, 2, 3], std)
        xbar = np.zeros((100_000, 7))
        noise = measure(model, xbar, np.random.default_rng(3))
        cov = np.cov(noise.T)
        np.testing.assert_allclose(np.diag(cov), std**2, rtol=0.05)
        off = cov - np.diag(np.diag(cov))
        assert np.all(np.abs(off) <= 0.05 * np.outer(std, std))

    def test_log_likelihood_peak(self):
        """Test the log density is maximal at zero innovation."""
        model = MeasurementModel.diagonal([0], [0.5])
        states = np.array([[0.0], [0.5], [1.0]])
        loglik = model.log_likelihood([0.0], states)
        assert loglik[0] > loglik[1] > loglik[2]
        assert loglik[0] == pytest.approx(-0.5 * np.log(2 * np.pi * 0.25))

    @pytest.mark.parametrize(
        "R_v",
        [
            np.array([[1.0, 0.0], [0.0, -1.0]]),
            np.array([[1.0, 0.5], [0.0, 1.0]]),
            np.eye(3),
        ],
    )
    def test_invalid_noise(self, R_v):
        """Test non-PD, asymmetric or wrongly sized R_v is rejected."""
        with pytest.raises(ConfigurationError):
            MeasurementModel(observed=(0, 1), R_v=R_v)


class TestKernelDrivenLatent:
    """Test the latent block of the augmented model against its SDE."""

    def test_latent_block_is_companion(self):
        """Test the augmented latent rows equal A z."""
        sde = matern_to_sde(KernelSpec(sigma2=1.0, ell=2.0, nu=1.5))
        model = augment(ScalarIntegrator(), sde)
        z = np.array([0.3, -0.4])
        drift = model.drift(np.concatenate([[0.0], z]), [0.0])
        np.testing.assert_allclose(drift[1:], sde.A @ z)
        assert drift[0] == pytest.approx(0.3)
