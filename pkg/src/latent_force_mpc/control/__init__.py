"""Scenario model predictive control."""

from latent_force_mpc.control.constraints import (
    CorridorBounds,
    PositionBounds,
    StateConstraint,
    VelocityBounds,
    build_state_constraints,
)
from latent_force_mpc.control.mpc import (
    ControlPlan,
    ScenarioMpcController,
    ScenarioProblem,
    plan_summary,
    receding_horizon_step,
    shift_plan,
    solve,
)
from latent_force_mpc.control.objective import scenario_objective, scenario_objective_grad
from latent_force_mpc.control.scenarios import ScenarioSet, rollout, rollout_vjp, sample_scenarios

__all__ = [
    "CorridorBounds",
    "PositionBounds",
    "StateConstraint",
    "VelocityBounds",
    "build_state_constraints",
    "ControlPlan",
    "ScenarioMpcController",
    "ScenarioProblem",
    "plan_summary",
    "receding_horizon_step",
    "shift_plan",
    "solve",
    "scenario_objective",
    "scenario_objective_grad",
    "ScenarioSet",
    "rollout",
    "rollout_vjp",
    "sample_scenarios",
]
