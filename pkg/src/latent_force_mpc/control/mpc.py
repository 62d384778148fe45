"""Scenario MPC: single-shooting problem assembly and the receding-horizon controller."""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.config.schema import MpcConfig
from latent_force_mpc.control.constraints import StateConstraint
from latent_force_mpc.control.objective import scenario_objective, scenario_objective_grad
from latent_force_mpc.control.scenarios import ScenarioSet, rollout, rollout_vjp, sample_scenarios
from latent_force_mpc.core.errors import NumericalBlowUpError
from latent_force_mpc.dynamics.augmented import AugmentedModel
from latent_force_mpc.estimation.particle_filter import Estimate
from latent_force_mpc.optim.nlp import CONVERGED_STATUSES, NlpProblem, SoftConstraint, SolveStatus, minimize
from latent_force_mpc.utils.rng import Stream, derive_rng

logger = logging.getLogger(__name__)


@dataclass
class ControlPlan:
    """Optimized input sequence with solver statistics.

    Attributes:
        inputs: Input sequence, shape (N, n_u), inside the input box
        cost: Scenario objective at ``inputs`` (penalties excluded)
        iterations: Solver iterations
        residual: Projected-gradient norm at termination, on the averaged merit in box-scaled inputs
        max_violation: Largest state-constraint violation over scenarios and steps
        scenario_violation: Largest violation per scenario, shape (Ns,)
        status: Solver termination status
        solve_time: Wall-clock seconds
    """

    inputs: np.ndarray
    cost: float
    iterations: int
    residual: float
    max_violation: float
    scenario_violation: np.ndarray
    status: SolveStatus
    solve_time: float = 0.0

    @property
    def degraded(self) -> bool:
        return self.status not in CONVERGED_STATUSES

    @property
    def first_input(self) -> np.ndarray:
        return self.inputs[0].copy()


class ScenarioProblem:
    """Scenario optimal control problem over the flattened input sequence.

    Rollouts are cached for the most recent input vector so the objective and
    every constraint evaluated at the same point share one forward pass.
    """

    def __init__(
        self,
        model: AugmentedModel,
        xbar0: ArrayLike,
        cfg: MpcConfig,
        scenarios: ScenarioSet,
        constraints: Sequence[StateConstraint] = (),
    ):
        if scenarios.horizon != cfg.N:
            raise ValueError(f"scenario horizon {scenarios.horizon} differs from N={cfg.N}")
        self.model = model
        self.xbar0 = np.asarray(xbar0, dtype=float)
        self.cfg = cfg
        self.scenarios = scenarios
        self.constraints = list(constraints)
        self._cache_key: Optional[bytes] = None
        self._cache_traj: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.cfg.N * self.model.n_u

    def inputs(self, u_flat: np.ndarray) -> np.ndarray:
        return np.asarray(u_flat, dtype=float).reshape(self.cfg.N, self.model.n_u)

    def trajectories(self, u_flat: np.ndarray) -> Optional[np.ndarray]:
        """Scenario rollouts at ``u_flat``; None if the rollout diverged."""
        key = np.ascontiguousarray(u_flat, dtype=float).tobytes()
        if key != self._cache_key:
            try:
                self._cache_traj = rollout(self.model, self.xbar0, self.inputs(u_flat), self.scenarios)
            except NumericalBlowUpError as e:
                logger.debug(f"Rollout diverged at trial point: {e}")
                self._cache_traj = None
            self._cache_key = key
        return self._cache_traj

    def objective(self, u_flat: np.ndarray) -> Tuple[float, np.ndarray]:
        traj = self.trajectories(u_flat)
        if traj is None:
            return np.inf, np.zeros(self.dim)
        inputs = self.inputs(u_flat)
        cost = scenario_objective(traj, inputs, self.cfg)
        cotangents, input_grad = scenario_objective_grad(traj, inputs, self.cfg)
        grad = rollout_vjp(self.model, traj, inputs, cotangents, self.scenarios.dt) + input_grad
        return cost, grad.ravel()

    def _residuals(self, constraint: StateConstraint, u_flat: np.ndarray) -> np.ndarray:
        traj = self.trajectories(u_flat)
        shape = (self.scenarios.n_scenarios, self.cfg.N, constraint.size)
        if traj is None:
            return np.full(shape, np.inf)
        return constraint.residuals(traj[:, 1:, : self.model.n_x])

    def _vjp(self, constraint: StateConstraint, u_flat: np.ndarray, v: np.ndarray) -> np.ndarray:
        traj = self.trajectories(u_flat)
        if traj is None:
            return np.zeros(self.dim)
        jac = constraint.jacobian(traj[:, 1:, : self.model.n_x])
        cotangents = np.zeros_like(traj)
        cotangents[:, 1:, : self.model.n_x] = np.einsum("skm,skmx->skx", v, jac)
        return rollout_vjp(self.model, traj, self.inputs(u_flat), cotangents, self.scenarios.dt).ravel()

    def soft_constraint(self, constraint: StateConstraint) -> SoftConstraint:
        return SoftConstraint(
            fun=lambda u, c=constraint: self._residuals(c, u),
            vjp=lambda u, v, c=constraint: self._vjp(c, u, v),
            weight=self.cfg.solver.penalty_weight,
            name=constraint.name,
        )

    def scenario_violation(self, u_flat: np.ndarray) -> np.ndarray:
        """Largest violation per scenario over steps 1..N and all constraints."""
        traj = self.trajectories(u_flat)
        worst = np.zeros(self.scenarios.n_scenarios)
        if traj is None:
            return np.full(self.scenarios.n_scenarios, np.inf)
        for constraint in self.constraints:
            worst = np.maximum(worst, np.max(constraint.violation(traj[:, 1:, : self.model.n_x]), axis=1))
        return worst

    @property
    def normalizer(self) -> float:
        """Scenario-step count Ns·N dividing the solver merit."""
        return float(self.scenarios.n_scenarios * self.cfg.N)

    def normalized_objective(self, u_flat: np.ndarray) -> Tuple[float, np.ndarray]:
        cost, grad = self.objective(u_flat)
        return cost / self.normalizer, grad / self.normalizer

    def input_scale(self) -> np.ndarray:
        """Half-width of the input box per decision variable, 1 where unbounded."""
        lower, upper = self.cfg.input_box()
        half = 0.5 * (upper - lower)
        half = np.where(np.isfinite(half) & (half > 0.0), half, 1.0)
        return np.tile(half, self.cfg.N)

    def nlp(self) -> NlpProblem:
        """Solver problem: objective and penalties averaged over scenario steps, inputs scaled to the box."""
        lower, upper = self.cfg.input_box()
        soft = [self.soft_constraint(c) for c in self.constraints]
        for constraint in soft:
            constraint.weight /= self.normalizer
        return NlpProblem(
            dim=self.dim,
            objective=self.normalized_objective,
            lower=np.tile(lower, self.cfg.N),
            upper=np.tile(upper, self.cfg.N),
            soft_constraints=soft,
            scale=self.input_scale(),
        )


def solve(
    model: AugmentedModel,
    xbar_hat0: ArrayLike,
    cfg: MpcConfig,
    scenarios: ScenarioSet,
    warm_start: Optional[ArrayLike] = None,
    constraints: Sequence[StateConstraint] = (),
) -> ControlPlan:
    """Solve the scenario program from the estimated augmented state.

    Args:
        model: Augmented prediction model
        xbar_hat0: Estimated initial augmented state, shared by all scenarios
        cfg: MPC settings
        scenarios: Noise scenarios over the horizon
        warm_start: Initial input sequence, shape (N, n_u); zero when omitted
        constraints: Soft state constraints enforced on every scenario at steps 1..N

    Returns:
        ControlPlan; ``degraded`` is set when the solver did not converge

    Raises:
        ValueError: If the estimate is not finite
    """
    xbar_hat0 = np.asarray(xbar_hat0, dtype=float)
    if not np.all(np.isfinite(xbar_hat0)):
        raise ValueError("initial state estimate is not finite")
    problem = ScenarioProblem(model, xbar_hat0, cfg, scenarios, constraints)
    x0 = np.zeros(problem.dim) if warm_start is None else np.asarray(warm_start, dtype=float).ravel()

    started = time.perf_counter()
    report = minimize(problem.nlp(), x0, cfg.solver.tolerances())
    elapsed = time.perf_counter() - started

    scenario_violation = problem.scenario_violation(report.x)
    plan = ControlPlan(
        inputs=problem.inputs(report.x).copy(),
        cost=report.fun * problem.normalizer,
        iterations=report.iterations,
        residual=report.residual,
        max_violation=float(np.max(scenario_violation, initial=0.0)),
        scenario_violation=scenario_violation,
        status=report.status,
        solve_time=elapsed,
    )
    if plan.degraded:
        logger.warning(
            f"Scenario solve degraded ({report.status.value}) after {report.iterations} iterations, "
            f"residual {report.residual:.3g}"
        )
    return plan


def shift_plan(inputs: np.ndarray) -> np.ndarray:
    """Drop the applied input and repeat the last one."""
    return np.concatenate([inputs[1:], inputs[-1:]], axis=0)


@dataclass
class ScenarioMpcController:
    """Receding-horizon scenario MPC.

    Scenarios are redrawn at every step from a seed derived from the run seed
    and the step index.
    """

    model: AugmentedModel
    cfg: MpcConfig
    constraints: List[StateConstraint] = field(default_factory=list)
    seed: int = 0
    step_index: int = 0
    previous: Optional[ControlPlan] = None

    def reset(self) -> None:
        self.step_index = 0
        self.previous = None

    def scenarios_for(self, step: int) -> ScenarioSet:
        return sample_scenarios(self.model.latent, self.cfg, derive_rng(self.seed, Stream.SCENARIOS, step))

    def warm_start(self) -> Optional[np.ndarray]:
        if not self.cfg.warm_start or self.previous is None:
            return None
        return shift_plan(self.previous.inputs)

    def step(self, estimate: Estimate) -> ControlPlan:
        plan = solve(
            self.model,
            estimate.mean,
            self.cfg,
            self.scenarios_for(self.step_index),
            warm_start=self.warm_start(),
            constraints=self.constraints,
        )
        self.previous = plan
        self.step_index += 1
        return plan


def receding_horizon_step(
    controller: ScenarioMpcController, estimate: Estimate
) -> Tuple[np.ndarray, ControlPlan]:
    """Solve with fresh scenarios and return the first input.

    Returns:
        Tuple of (u₀*, full ControlPlan)
    """
    plan = controller.step(estimate)
    return plan.first_input, plan


def plan_summary(plan: ControlPlan) -> Dict[str, float]:
    """Flat solver statistics for logging."""
    return {
        "solve_time": plan.solve_time,
        "iterations": plan.iterations,
        "cost": plan.cost,
        "residual": plan.residual,
        "max_violation": plan.max_violation,
        "degraded": float(plan.degraded),
    }
