"""Closed-loop experiment: truth simulation, measurement, filtering and control."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from latent_force_mpc.config.schema import DegradedPolicy, EstimatorMode, ExperimentConfig
from latent_force_mpc.control.constraints import StateConstraint, build_state_constraints
from latent_force_mpc.control.mpc import ControlPlan, ScenarioMpcController, plan_summary, receding_horizon_step
from latent_force_mpc.core.errors import ConfigurationError, LatentForceMpcError, NumericalBlowUpError
from latent_force_mpc.dynamics.augmented import AugmentedModel, augment
from latent_force_mpc.dynamics.bicycle import PSI, KinematicBicycle, wrap_angle
from latent_force_mpc.dynamics.measurement import MeasurementModel, measure
from latent_force_mpc.estimation.particle_filter import (
    Estimate,
    ParticleCloud,
    pf_init,
    pf_step,
    pf_update,
)
from latent_force_mpc.gp.state_space import (
    DiscreteLatent,
    LatentSde,
    discretize_exact,
    matern_to_sde,
    psd_cholesky,
)
from latent_force_mpc.utils.rng import Stream, derive_rng

logger = logging.getLogger(__name__)

SOLVER_COLUMNS = ["solve_time", "iterations", "cost", "residual", "max_violation", "degraded", "status", "ess"]


class RunStatus(str, Enum):
    RUNNING = "running"
    GOAL_REACHED = "goal_reached"
    MAX_STEPS = "max_steps"
    FAILED = "failed"


@dataclass
class ExperimentSetup:
    """Models and constraints derived from an ExperimentConfig."""

    config: ExperimentConfig
    nominal: KinematicBicycle
    model: AugmentedModel
    truth_latent: LatentSde
    truth_step: DiscreteLatent
    measurement: MeasurementModel
    controller_constraints: List[StateConstraint]
    true_constraints: List[StateConstraint]


def build_setup(config: ExperimentConfig) -> ExperimentSetup:
    """Instantiate the prediction model, truth latent model and constraints.

    Raises:
        ConfigurationError: If the MPC dimensions do not fit the vehicle model
    """
    nominal = KinematicBicycle(length=config.model.length)
    if config.mpc.n_x != nominal.n_x or config.mpc.n_u != nominal.n_u:
        raise ConfigurationError(
            f"MPC weights are sized for n_x={config.mpc.n_x}, n_u={config.mpc.n_u}; "
            f"{nominal.name} has n_x={nominal.n_x}, n_u={nominal.n_u}"
        )
    model = augment(nominal, matern_to_sde(config.kernel), config.model.disturbance_map)
    truth_latent = matern_to_sde(config.effective_truth_kernel)
    truth_step = discretize_exact(truth_latent, config.mpc.dt / config.run.substeps)
    measurement = MeasurementModel.diagonal(config.model.observed, config.model.measurement_std)
    cfg = config.mpc.state_constraints
    return ExperimentSetup(
        config=config,
        nominal=nominal,
        model=model,
        truth_latent=truth_latent,
        truth_step=truth_step,
        measurement=measurement,
        controller_constraints=build_state_constraints(cfg, config.track, controller_side=True),
        true_constraints=build_state_constraints(cfg, config.track, controller_side=False),
    )


def log_columns(setup: ExperimentSetup) -> List[str]:
    """Fixed CSV column order of a run log.

    step, t; true_<state>, w_true; y_<observed state>; est_<augmented state> and
    est_<augmented state>_2sd pairs; w_est, w_2sd; u_<input>; solver columns;
    viol_<true constraint>. README.md documents the case-study instance.
    """
    model = setup.model
    columns = ["step", "t"]
    columns += [f"true_{label}" for label in setup.nominal.state_labels] + ["w_true"]
    columns += [f"y_{model.state_labels[i]}" for i in setup.measurement.observed]
    for label in model.state_labels:
        columns += [f"est_{label}", f"est_{label}_2sd"]
    columns += ["w_est", "w_2sd"]
    columns += [f"u_{label}" for label in setup.nominal.input_labels]
    columns += SOLVER_COLUMNS
    columns += [f"viol_{c.name}" for c in setup.true_constraints]
    return columns


@dataclass
class RunLog:
    """Per-step records of one closed-loop run."""

    columns: List[str]
    dt: float
    seed: int = 0
    rows: List[Dict[str, Any]] = field(default_factory=list)
    status: RunStatus = RunStatus.RUNNING
    error: Optional[str] = None

    def append(self, row: Dict[str, Any]) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"Unknown log columns: {sorted(unknown)}")
        self.rows.append(row)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def failed(self) -> bool:
        return self.status == RunStatus.FAILED

    @property
    def goal_reached(self) -> bool:
        return self.status == RunStatus.GOAL_REACHED

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)


class _Truth:
    """Ground-truth vehicle and disturbance; hidden from the controller."""

    def __init__(self, setup: ExperimentSetup, seed: int):
        self.setup = setup
        self.seed = seed
        self.x = np.asarray(setup.config.run.start, dtype=float)
        init_rng = derive_rng(seed, Stream.TRUTH_INIT)
        self.z = psd_cholesky(setup.truth_latent.Pinf) @ init_rng.standard_normal(setup.truth_latent.p)
        self._noise_factor = psd_cholesky(setup.truth_step.Qd)

    @property
    def w(self) -> float:
        return float((self.setup.truth_latent.C @ self.z)[0])

    def augmented(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def advance(self, u: np.ndarray, step: int) -> None:
        substeps = self.setup.config.run.substeps
        h = self.setup.config.mpc.dt / substeps
        noise = derive_rng(self.seed, Stream.TRUTH_NOISE, step).standard_normal((substeps, self.z.size))
        channels = self.setup.model.disturbance_map
        for j in range(substeps):
            w = self.setup.truth_latent.C @ self.z
            self.x = self.x + self.setup.nominal.drift(self.x, u, w, channels) * h
            self.z = self.setup.truth_step.Ad @ self.z + self._noise_factor @ noise[j]
        if not np.all(np.isfinite(self.x)):
            bad = [self.setup.nominal.state_labels[i] for i in np.flatnonzero(~np.isfinite(self.x))]
            raise NumericalBlowUpError("Truth simulation diverged", bad)


def _estimate_columns(setup: ExperimentSetup, estimate: Estimate) -> Dict[str, float]:
    model = setup.model
    mean = estimate.mean.copy()
    mean[PSI] = wrap_angle(mean[PSI])
    std = estimate.std
    row: Dict[str, float] = {}
    for i, label in enumerate(model.state_labels):
        row[f"est_{label}"] = float(mean[i])
        row[f"est_{label}_2sd"] = float(2.0 * std[i])
    C = model.latent.C
    cov_zz = estimate.cov[model.n_x :, model.n_x :]
    row["w_est"] = float(model.disturbance(estimate.mean)[0])
    row["w_2sd"] = float(2.0 * np.sqrt(max(float((C @ cov_zz @ C.T)[0, 0]), 0.0)))
    return row


def _should_hold(plan: ControlPlan, config: ExperimentConfig, k: int, holds: int) -> bool:
    """Hold only degraded solves that never left their starting point, at most ``max_holds`` in a row."""
    if not plan.degraded or config.run.degraded_policy != DegradedPolicy.HOLD or k == 0:
        return False
    return plan.iterations == 0 and holds < config.run.max_holds


def run_experiment(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    progress: Optional[Callable[[int], None]] = None,
) -> RunLog:
    """Run one closed-loop experiment.

    Each step: measure the truth, update the estimator, stop if the goal region
    is reached, solve the scenario program, apply the first input to the truth.
    Component errors mark the log as failed and keep the rows logged so far.

    Args:
        config: Validated experiment configuration
        seed: Run seed (defaults to ``config.run.seed``)
        progress: Called with the step index after every step

    Returns:
        RunLog
    """
    seed = config.run.seed if seed is None else int(seed)
    setup = build_setup(config)
    model, measurement = setup.model, setup.measurement
    dt = config.mpc.dt
    goal = config.mpc.goal()[:2]
    run_log = RunLog(columns=log_columns(setup), dt=dt, seed=seed)

    truth = _Truth(setup, seed)
    controller = ScenarioMpcController(
        model=model, cfg=config.mpc, constraints=setup.controller_constraints, seed=seed
    )
    oracle = config.filter.mode == EstimatorMode.ORACLE
    cloud: Optional[ParticleCloud] = None
    u_prev = np.zeros(model.n_u)
    holds = 0
    logger.info(
        f"Starting run seed={seed}: {config.filter.mode.value} estimator, "
        f"N={config.mpc.N}, Ns={config.mpc.Ns}, N_p={config.filter.n_particles}"
    )

    try:
        for k in range(config.run.max_steps + 1):
            y = measure(measurement, truth.x, derive_rng(seed, Stream.MEASUREMENT, k))
            ess = np.nan
            if oracle:
                estimate = Estimate.exact(truth.augmented())
            else:
                filter_rng = derive_rng(seed, Stream.FILTER_STEP, k)
                if cloud is None:
                    cloud = pf_init(
                        model,
                        np.asarray(config.run.start, dtype=float),
                        model.latent.Pinf,
                        config.filter.n_particles,
                        derive_rng(seed, Stream.FILTER_INIT),
                    )
                    cloud, estimate = pf_update(
                        cloud, measurement, y, filter_rng, config.filter.resample, config.filter.ess_fraction
                    )
                else:
                    cloud, estimate = pf_step(
                        cloud,
                        model,
                        measurement,
                        u_prev,
                        y,
                        dt,
                        filter_rng,
                        config.filter.resample,
                        config.filter.ess_fraction,
                    )
                ess = cloud.ess

            row: Dict[str, Any] = {"step": k, "t": k * dt}
            true_x = truth.x.copy()
            true_x[PSI] = wrap_angle(true_x[PSI])
            row.update({f"true_{label}": float(v) for label, v in zip(setup.nominal.state_labels, true_x)})
            row["w_true"] = truth.w
            row.update({f"y_{model.state_labels[i]}": float(v) for i, v in zip(measurement.observed, y)})
            row.update(_estimate_columns(setup, estimate))
            row.update({f"viol_{c.name}": float(c.violation(truth.x)) for c in setup.true_constraints})
            row["ess"] = ess

            at_goal = float(np.hypot(*(truth.x[:2] - goal))) <= config.mpc.goal_radius
            if at_goal or k == config.run.max_steps:
                row.update({f"u_{label}": np.nan for label in setup.nominal.input_labels})
                run_log.append(row)
                run_log.status = RunStatus.GOAL_REACHED if at_goal else RunStatus.MAX_STEPS
                break

            u0, plan = receding_horizon_step(controller, estimate)
            applied = u0
            if _should_hold(plan, config, k, holds):
                applied = u_prev
                holds += 1
                logger.warning(f"Step {k}: degraded solve, holding previous input {applied.tolist()}")
            else:
                holds = 0
                if plan.degraded:
                    logger.warning(f"Step {k}: applying best iterate of a degraded solve ({plan.status.value})")

            row.update({f"u_{label}": float(v) for label, v in zip(setup.nominal.input_labels, applied)})
            row.update(plan_summary(plan))
            row["status"] = plan.status.value
            run_log.append(row)
            logger.info(
                f"Step {k}",
                extra={
                    "fields": {
                        "step": k,
                        "t": k * dt,
                        "u": applied,
                        "ess": ess,
                        **plan_summary(plan),
                    }
                },
            )

            truth.advance(applied, k)
            u_prev = np.asarray(applied, dtype=float)
            if progress is not None:
                progress(k)
    except LatentForceMpcError as e:
        run_log.status = RunStatus.FAILED
        run_log.error = f"{type(e).__name__}: {e}"
        logger.error(f"Run seed={seed} failed after {run_log.n_rows} rows: {e}", exc_info=True)
        return run_log

    if run_log.goal_reached:
        logger.info(f"Goal reached at t={run_log.rows[-1]['t']:.1f}s (seed={seed})")
    else:
        logger.warning(f"Run seed={seed} stopped at max_steps={config.run.max_steps} without reaching the goal")
    return run_log


def run_sweep(
    config: ExperimentConfig,
    seeds: Sequence[int],
    progress: Optional[Callable[[int], None]] = None,
) -> List[RunLog]:
    """Run the same experiment for several seeds."""
    logs = []
    for seed in seeds:
        logs.append(run_experiment(config, seed))
        if progress is not None:
            progress(seed)
    return logs
