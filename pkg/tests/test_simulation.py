"""Tests for the closed-loop harness: track, runner, metrics and plots."""

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import pytest

from latent_force_mpc.config.schema import ExperimentConfig, MpcConfig, StateConstraintsConfig, TrackSpec
from latent_force_mpc.control.mpc import ControlPlan
from latent_force_mpc.core.errors import ConfigurationError, NumericalBlowUpError
from latent_force_mpc.optim.nlp import SolveStatus
from latent_force_mpc.simulation import runner
from latent_force_mpc.simulation.metrics import (
    RunMetrics,
    compute_metrics,
    cruise_correlation,
    latent_coverage,
    summarize_sweep,
)
from latent_force_mpc.simulation.plots import build_figures, plot_run, save_svg, trajectory_figure
from latent_force_mpc.simulation.runner import (
    RunLog,
    RunStatus,
    _Truth,
    build_setup,
    log_columns,
    run_experiment,
    run_sweep,
)
from latent_force_mpc.simulation.track import centerline, centerline_slope, make_track, track_polyline


def with_updates(config, **sections):
    """Re-validated copy with nested section updates, e.g. run={"seed": 3}."""
    data = config.model_dump(mode="json")
    for section, values in sections.items():
        if isinstance(values, dict):
            data[section].update(values)
        else:
            data[section] = values
    return ExperimentConfig.model_validate(data)


def metrics_frame(**columns):
    """Minimal log frame for metric tests."""
    n = len(next(iter(columns.values())))
    base = {
        "step": np.arange(n),
        "t": 0.2 * np.arange(n),
        "true_px": np.zeros(n),
        "true_py": np.zeros(n),
        "true_v": np.full(n, 3.0),
        "w_true": np.zeros(n),
        "w_est": np.zeros(n),
        "w_2sd": np.ones(n),
        "u_accel": np.zeros(n),
        "solve_time": np.full(n, 0.01),
        "degraded": np.zeros(n),
        "viol_velocity": np.zeros(n),
        "viol_corridor": np.zeros(n),
        "viol_position": np.zeros(n),
    }
    base.update(columns)
    return pd.DataFrame(base)


def script_plans(mocker, status, iterations):
    """Replace the MPC step by plans with the given status whose acceleration is 0.1·(k + 1)."""
    calls = []

    def scripted(controller, estimate):
        k = len(calls)
        calls.append(k)
        plan = ControlPlan(
            inputs=np.tile([0.1 * (k + 1), 0.0], (7, 1)),
            cost=0.0,
            iterations=iterations,
            residual=1.0,
            max_violation=0.0,
            scenario_violation=np.zeros(4),
            status=status,
        )
        return plan.first_input, plan

    return mocker.patch("latent_force_mpc.simulation.runner.receding_horizon_step", side_effect=scripted)


class TestTrack:
    """Test the sinusoidal corridor."""

    def test_bounds_at_origin(self):
        """Test x = 0 gives ±half-width."""
        lower, upper = make_track(TrackSpec(), 0.0)
        assert float(lower) == pytest.approx(-2.0)
        assert float(upper) == pytest.approx(2.0)

    def test_quarter_period(self):
        """Test the centerline peaks at x = P/4."""
        track = TrackSpec()
        assert float(centerline(track, 7.5)) == pytest.approx(4.0)
        lower, upper = make_track(track, 7.5)
        assert float(lower) == pytest.approx(2.0)
        assert float(upper) == pytest.approx(6.0)

    def test_constant_width(self):
        """Test the corridor width is 2·half-width everywhere."""
        xs = np.linspace(0.0, 60.0, 101)
        lower, upper = make_track(TrackSpec(), xs)
        np.testing.assert_allclose(upper - lower, 4.0)

    def test_slope_matches_finite_difference(self):
        """Test the analytic centerline slope."""
        track = TrackSpec()
        xs = np.linspace(1.0, 59.0, 13)
        h = 1e-6
        numeric = (centerline(track, xs + h) - centerline(track, xs - h)) / (2 * h)
        np.testing.assert_allclose(centerline_slope(track, xs), numeric, atol=1e-7)

    def test_polyline(self):
        """Test the plotting polyline spans the x-range."""
        xs, center, lower, upper = track_polyline(TrackSpec(), n_points=50)
        assert xs[0] == 0.0 and xs[-1] == 60.0
        assert len(center) == len(lower) == len(upper) == 50


class TestBuildSetup:
    """Test model construction from a config."""

    def test_case_study_dimensions(self, small_config):
        """Test the augmented bicycle and the constraint sets."""
        setup = build_setup(small_config)
        assert setup.model.n_a == 7
        assert [c.name for c in setup.controller_constraints] == ["velocity", "corridor", "position"]
        assert setup.controller_constraints[1].margin == 0.15
        assert setup.true_constraints[1].margin == 0.0

    def test_log_columns(self, small_config):
        """Test the fixed column order."""
        columns = log_columns(build_setup(small_config))
        assert columns[:7] == ["step", "t", "true_px", "true_py", "true_v", "true_psi", "w_true"]
        assert columns[7:11] == ["y_px", "y_py", "y_v", "y_psi"]
        assert columns[11:13] == ["est_px", "est_px_2sd"]
        assert "est_z2_2sd" in columns
        assert columns.index("u_accel") + 1 == columns.index("u_steer")
        assert columns[-3:] == ["viol_velocity", "viol_corridor", "viol_position"]
        assert len(columns) == len(set(columns))

    def test_mismatched_dimensions(self, small_config):
        """Test MPC weights sized for another model are rejected."""
        config = with_updates(
            small_config,
            mpc=MpcConfig(
                Q=[[1.0]],
                Qf=[[1.0]],
                R=[[1.0]],
                x_goal=[0.0],
                u_lower=[-1.0],
                u_upper=[1.0],
                state_constraints=StateConstraintsConfig.none(),
            ).model_dump(mode="json"),
            model={"disturbance_map": [0], "observed": [0], "measurement_std": [0.05]},
            run={"start": [0.0]},
        )
        with pytest.raises(ConfigurationError):
            build_setup(config)


class TestTruth:
    """Test the hidden ground-truth simulator."""

    def test_stationary_initial_latent(self, small_config):
        """Test the initial disturbance has variance σ² across seeds."""
        setup = build_setup(small_config)
        samples = np.array([_Truth(setup, seed).w for seed in range(4000)])
        assert samples.var() == pytest.approx(4.0, rel=0.1)

    def test_advance_is_seeded(self, small_config):
        """Test the same seed gives the same truth path."""
        setup = build_setup(small_config)
        first, second = _Truth(setup, 5), _Truth(setup, 5)
        for step in range(3):
            first.advance(np.array([1.0, 0.1]), step)
            second.advance(np.array([1.0, 0.1]), step)
        np.testing.assert_array_equal(first.augmented(), second.augmented())

    def test_substeps_integrate_physical_state(self, small_config):
        """Test finer physical integration still moves the vehicle forward."""
        config = with_updates(small_config, run={"substeps": 4, "start": [0.0, 0.0, 2.0, 0.0]})
        truth = _Truth(build_setup(config), 0)
        truth.advance(np.array([0.0, 0.0]), 0)
        assert truth.x[0] > 0.0


class TestRunExperiment:
    """Test the closed loop."""

    def test_runs_to_step_budget(self, small_config):
        """Test row count, time stamps and the terminal row."""
        run_log = run_experiment(small_config)
        frame = run_log.to_frame()
        assert run_log.status == RunStatus.MAX_STEPS
        assert len(frame) == 4
        np.testing.assert_array_equal(frame["step"], [0, 1, 2, 3])
        np.testing.assert_allclose(frame["t"], [0.0, 0.2, 0.4, 0.6])
        assert np.isnan(frame["u_accel"].iloc[-1])
        assert list(frame.columns) == log_columns(build_setup(small_config))

    def test_inputs_inside_box(self, small_config):
        """Test every applied input respects the input bounds."""
        frame = run_experiment(small_config).to_frame().iloc[:-1]
        assert np.all(np.abs(frame["u_accel"]) <= 5.0)
        assert np.all(np.abs(frame["u_steer"]) <= np.radians(25.0) + 1e-12)

    def test_oracle_estimate_is_truth(self, small_config):
        """Test oracle feedback logs the true state with zero bands."""
        frame = run_experiment(small_config).to_frame()
        np.testing.assert_array_equal(frame["est_px"], frame["true_px"])
        np.testing.assert_array_equal(frame["w_est"], frame["w_true"])
        np.testing.assert_array_equal(frame["w_2sd"], 0.0)

    def test_deterministic(self, small_config):
        """Test the same seed reproduces the log apart from wall-clock time."""
        first = run_experiment(small_config, seed=11).to_frame().drop(columns=["solve_time"])
        second = run_experiment(small_config, seed=11).to_frame().drop(columns=["solve_time"])
        pd.testing.assert_frame_equal(first, second)

    def test_seeds_differ(self, small_config):
        """Test different seeds draw different disturbances."""
        first = run_experiment(small_config, seed=1).to_frame()
        second = run_experiment(small_config, seed=2).to_frame()
        assert first["w_true"].iloc[0] != second["w_true"].iloc[0]

    def test_particle_filter_mode(self, small_pf_config):
        """Test the filter reports ESS and non-degenerate uncertainty bands."""
        run_log = run_experiment(small_pf_config)
        frame = run_log.to_frame()
        assert not run_log.failed
        assert np.all((frame["ess"] >= 1.0) & (frame["ess"] <= 200.0 + 1e-6))
        assert np.all(frame["w_2sd"] > 0.0)

    def test_goal_at_start(self, small_config):
        """Test a run starting inside the goal region stops immediately."""
        config = with_updates(small_config, run={"start": [60.0, 0.0, 0.0, 0.0]})
        run_log = run_experiment(config)
        assert run_log.goal_reached
        assert run_log.n_rows == 1
        assert np.isnan(run_log.rows[0]["u_accel"])

    def test_progress_callback(self, small_config):
        """Test progress is reported once per control step."""
        steps = []
        run_experiment(small_config, progress=steps.append)
        assert steps == [0, 1, 2]

    def test_failure_keeps_partial_log(self, small_config, mocker):
        """Test a component error marks the run failed and keeps earlier rows."""
        original = runner.receding_horizon_step

        def flaky(controller, estimate):
            if controller.step_index >= 1:
                raise NumericalBlowUpError("Euler-Maruyama step diverged", ["v"])
            return original(controller, estimate)

        mocker.patch("latent_force_mpc.simulation.runner.receding_horizon_step", side_effect=flaky)
        run_log = run_experiment(small_config)
        assert run_log.failed
        assert run_log.n_rows == 1
        assert "NumericalBlowUpError" in run_log.error

    def test_degraded_solve_holds_previous_input(self, small_config, mocker):
        """Test the hold policy reapplies the last input after a solve that never moved."""
        script_plans(mocker, SolveStatus.LINE_SEARCH_FAILED, iterations=0)
        frame = run_experiment(small_config).to_frame()
        assert frame["u_accel"].iloc[1] == frame["u_accel"].iloc[0] == pytest.approx(0.1)
        assert frame["u_accel"].iloc[2] == frame["u_accel"].iloc[0]
        assert np.all(frame["degraded"].iloc[:-1] == 1.0)

    def test_consecutive_holds_are_capped(self, small_config, mocker):
        """Test at most max_holds steps in a row reuse the previous input."""
        config = with_updates(small_config, run={"max_steps": 4, "max_holds": 1})
        script_plans(mocker, SolveStatus.LINE_SEARCH_FAILED, iterations=0)
        frame = run_experiment(config).to_frame()
        np.testing.assert_allclose(frame["u_accel"].iloc[:4], [0.1, 0.1, 0.3, 0.3])

    def test_degraded_solve_with_progress_is_applied(self, small_config, mocker):
        """Test a degraded solve that improved on its warm start applies its best iterate."""
        script_plans(mocker, SolveStatus.MAX_ITERATIONS, iterations=30)
        frame = run_experiment(small_config).to_frame()
        np.testing.assert_allclose(frame["u_accel"].iloc[:3], [0.1, 0.2, 0.3])
        assert np.all(frame["degraded"].iloc[:-1] == 1.0)

    def test_filter_starts_from_configured_state(self, small_pf_config, mocker):
        """Test the particle cloud is centred on the configured start, not the true state."""
        config = with_updates(small_pf_config, run={"start": [1.0, 0.5, 2.0, 0.1], "max_steps": 1})
        init_spy = mocker.spy(runner, "pf_init")
        run_experiment(config, seed=2)
        init_spy.assert_called_once()
        np.testing.assert_array_equal(init_spy.call_args.args[1], [1.0, 0.5, 2.0, 0.1])

    def test_sweep(self, small_config):
        """Test one log per seed."""
        logs = run_sweep(small_config, [0, 1])
        assert [log.seed for log in logs] == [0, 1]


class TestRunLog:
    """Test the in-memory log."""

    def test_unknown_column(self):
        """Test rows with unknown keys are rejected."""
        run_log = RunLog(columns=["step", "t"], dt=0.2)
        with pytest.raises(KeyError):
            run_log.append({"step": 0, "speed": 1.0})

    def test_empty_frame_keeps_columns(self):
        """Test an empty log still has the column schema."""
        frame = RunLog(columns=["step", "t"], dt=0.2).to_frame()
        assert frame.empty
        assert list(frame.columns) == ["step", "t"]


class TestMetrics:
    """Test closed-loop metrics."""

    def test_latent_coverage(self):
        """Test the fraction of steps inside the 2σ band."""
        frame = metrics_frame(
            w_true=np.array([0.0, 1.0, 2.0]), w_est=np.zeros(3), w_2sd=np.array([0.5, 0.5, 3.0])
        )
        assert latent_coverage(frame) == pytest.approx(2.0 / 3.0)

    def test_cruise_correlation_cancelling(self, small_config):
        """Test a = −ŵ gives correlation −1."""
        w_est = np.array([1.0, 2.0, -0.5, -1.0])
        frame = metrics_frame(w_est=w_est, u_accel=-w_est)
        assert cruise_correlation(frame, small_config) == pytest.approx(-1.0)

    def test_cruise_correlation_needs_rows(self, small_config):
        """Test fewer than three cruising rows give NaN."""
        frame = metrics_frame(w_est=np.array([1.0, 2.0]), u_accel=np.array([-1.0, -2.0]))
        assert np.isnan(cruise_correlation(frame, small_config))

    def test_cruise_excludes_off_center(self, small_config):
        """Test rows far from the centerline are not cruising."""
        w_est = np.array([1.0, 2.0, -0.5, -1.0])
        frame = metrics_frame(w_est=w_est, u_accel=-w_est, true_py=np.array([0.0, 1.5, -1.5, 0.0]))
        assert np.isnan(cruise_correlation(frame, small_config))

    def test_compute_metrics(self, small_config):
        """Test overshoot, violation rates and the corridor flag."""
        frame = metrics_frame(
            true_v=np.array([1.0, 8.5, -0.2, 3.0]),
            viol_corridor=np.array([0.0, 0.1, 0.0, 0.0]),
            degraded=np.array([0.0, 1.0, 0.0, np.nan]),
        )
        metrics = compute_metrics(frame, small_config, seed=3, status="goal_reached")
        assert metrics.goal_reached
        assert metrics.max_velocity_overshoot == pytest.approx(0.5)
        assert metrics.violation_rates["corridor"] == pytest.approx(0.25)
        assert metrics.violation_rates["velocity"] == 0.0
        assert not metrics.corridor_satisfied
        assert metrics.degraded_steps == 1
        assert metrics.median_solve_time == pytest.approx(0.01)
        assert metrics.to_dict()["seed"] == 3

    def test_summarize_sweep(self):
        """Test aggregation over runs."""
        runs = [
            RunMetrics(seed=0, status="goal_reached", steps=10, goal_reached=True, corridor_satisfied=True,
                       max_velocity_overshoot=0.1, latent_coverage=0.9),
            RunMetrics(seed=1, status="max_steps", steps=300, goal_reached=False, corridor_satisfied=False,
                       max_velocity_overshoot=0.3, latent_coverage=0.8),
        ]
        summary = summarize_sweep(runs)
        assert summary["runs"] == 2
        assert summary["goal_reach_rate"] == 0.5
        assert summary["corridor_satisfied_rate"] == 1.0
        assert summary["max_velocity_overshoot"] == pytest.approx(0.3)
        assert summary["median_latent_coverage"] == pytest.approx(0.85)
        assert summary["failed_runs"] == 0

    def test_summarize_empty(self):
        """Test no runs give an empty summary."""
        assert summarize_sweep([]) == {}


class TestPlots:
    """Test SVG figure generation."""

    def test_trajectory_inside_figure(self, small_config):
        """Test every plotted point maps inside the figure canvas."""
        frame = run_experiment(small_config).to_frame()
        fig = trajectory_figure(frame, small_config)
        fig.canvas.draw()
        ax = fig.axes[0]
        width, height = fig.bbox.width, fig.bbox.height
        for line in ax.lines:
            points = ax.transData.transform(line.get_xydata())
            assert np.all(points[:, 0] >= -1e-6) and np.all(points[:, 0] <= width + 1e-6)
            assert np.all(points[:, 1] >= -1e-6) and np.all(points[:, 1] <= height + 1e-6)
        plt.close(fig)

    def test_four_figures(self, small_config, temp_out_dir):
        """Test one SVG per figure."""
        frame = run_experiment(small_config).to_frame()
        paths = plot_run(frame, small_config, temp_out_dir / "plots")
        assert sorted(p.name for p in paths) == ["acceleration.svg", "latent.svg", "trajectory.svg", "velocity.svg"]
        assert all(p.read_text().lstrip().startswith("<?xml") for p in paths)

    def test_empty_frame_writes_nothing(self, small_config, temp_out_dir):
        """Test an empty log produces no plots."""
        frame = RunLog(columns=log_columns(build_setup(small_config)), dt=0.2).to_frame()
        assert plot_run(frame, small_config, temp_out_dir) == []

    def test_svg_reproducible(self, small_config, temp_out_dir):
        """Test the same figure renders to identical bytes."""
        frame = run_experiment(small_config).to_frame()
        first = save_svg(build_figures(frame, small_config)["latent"], temp_out_dir / "a.svg")
        second = save_svg(build_figures(frame, small_config)["latent"], temp_out_dir / "b.svg")
        assert first.read_bytes() == second.read_bytes()
