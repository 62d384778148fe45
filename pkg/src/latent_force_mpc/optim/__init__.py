"""Nonlinear programming."""

from latent_force_mpc.optim.nlp import (
    NlpProblem,
    SoftConstraint,
    SolveReport,
    SolveStatus,
    Tolerances,
    grad_check,
    minimize,
    projected_gradient,
)

__all__ = [
    "NlpProblem",
    "SoftConstraint",
    "SolveReport",
    "SolveStatus",
    "Tolerances",
    "grad_check",
    "minimize",
    "projected_gradient",
]
