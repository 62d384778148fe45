"""Box-constrained smooth NLP solver with soft inequality constraints.

Inner solver: projected BFGS with an active-set restriction and Armijo
backtracking along the projected path. Soft constraints g(x) ≤ 0 enter the
merit through PHR augmented-Lagrangian terms

    (1 / 2w) Σ (max(0, λ + w g)² − λ²)

whose multipliers λ are updated between rounds; a single round with λ = 0 is
the plain quadratic penalty (w/2) Σ max(0, g)².

Problems may carry a per-variable ``scale``; the solver then iterates on
ξ = x / scale, so tolerances and the reported residual refer to ξ.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.core.errors import ConfigurationError, SolverError

logger = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 40
# predicted decreases below this fraction of |f| are lost to rounding
ROUNDOFF = 100.0 * np.finfo(float).eps

ObjectiveFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class SoftConstraint:
    """Vector inequality g(x) ≤ 0 handled by penalty.

    Attributes:
        fun: x ↦ g(x), any shape
        vjp: (x, v) ↦ J(x)ᵀ v for a cotangent v shaped like g(x)
        weight: Penalty weight w > 0
        name: Label used in reports
    """

    fun: Callable[[np.ndarray], np.ndarray]
    vjp: Callable[[np.ndarray, np.ndarray], np.ndarray]
    weight: float = 1e3
    name: str = "soft"


@dataclass
class NlpProblem:
    """Smooth objective over a box with soft constraints.

    Attributes:
        dim: Number of decision variables
        objective: x ↦ (f(x), ∇f(x))
        lower: Lower bounds (may be -inf)
        upper: Upper bounds (may be +inf)
        soft_constraints: Penalized inequalities
        scale: Positive per-variable scale; the solver works on x / scale
    """

    dim: int
    objective: ObjectiveFn
    lower: np.ndarray = None
    upper: np.ndarray = None
    soft_constraints: List[SoftConstraint] = field(default_factory=list)
    scale: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.lower = np.full(self.dim, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(self.dim, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.lower.shape != (self.dim,) or self.upper.shape != (self.dim,):
            raise ConfigurationError(f"bounds must have shape ({self.dim},)")
        if np.any(self.lower > self.upper):
            raise ConfigurationError("lower bounds exceed upper bounds")
        for constraint in self.soft_constraints:
            if not constraint.weight > 0.0:
                raise ConfigurationError(f"penalty weight of {constraint.name} must be positive")
        if self.scale is not None:
            self.scale = np.asarray(self.scale, dtype=float)
            if self.scale.shape != (self.dim,):
                raise ConfigurationError(f"scale must have shape ({self.dim},)")
            if not np.all(np.isfinite(self.scale) & (self.scale > 0.0)):
                raise ConfigurationError("scale must be finite and positive")

    def project(self, x: ArrayLike) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def scaled(self) -> "NlpProblem":
        """Equivalent problem in ξ = x / scale with unit scale."""
        if self.scale is None:
            return self
        s = self.scale

        def objective(xi: np.ndarray) -> Tuple[float, np.ndarray]:
            f, g = self.objective(s * xi)
            return f, s * np.asarray(g, dtype=float)

        constraints = [
            SoftConstraint(
                fun=lambda xi, c=c: c.fun(s * xi),
                vjp=lambda xi, v, c=c: s * np.asarray(c.vjp(s * xi, v), dtype=float),
                weight=c.weight,
                name=c.name,
            )
            for c in self.soft_constraints
        ]
        return NlpProblem(self.dim, objective, self.lower / s, self.upper / s, constraints)


@dataclass(frozen=True)
class Tolerances:
    """Termination settings.

    Attributes:
        gtol: Absolute tolerance on the Euclidean norm of the projected gradient
        xtol: Step tolerance, relative to 1 + ‖x‖
        max_iters: Iteration budget shared by all penalty rounds
        constraint_tol: Soft violation accepted without another round
        penalty_rounds: Maximum augmented-Lagrangian rounds
    """

    gtol: float = 1e-6
    xtol: float = 1e-9
    max_iters: int = 200
    constraint_tol: float = 1e-4
    penalty_rounds: int = 3


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    STEP_TOLERANCE = "step_tolerance"
    MAX_ITERATIONS = "max_iterations"
    LINE_SEARCH_FAILED = "line_search_failed"


CONVERGED_STATUSES = frozenset({SolveStatus.CONVERGED, SolveStatus.STEP_TOLERANCE})


@dataclass
class SolveReport:
    """Result of :func:`minimize`."""

    x: np.ndarray
    fun: float
    merit: float
    iterations: int
    residual: float
    max_violation: float
    status: SolveStatus
    rounds: int = 1
    merit_history: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status in CONVERGED_STATUSES

    @property
    def degraded(self) -> bool:
        return not self.converged


def projected_gradient(x: np.ndarray, g: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Gradient with components pushing out of the box zeroed."""
    blocked = ((x <= lower) & (g > 0.0)) | ((x >= upper) & (g < 0.0))
    return np.where(blocked, 0.0, g)


class _Merit:
    """Objective plus augmented-Lagrangian penalty at fixed weights and multipliers."""

    def __init__(self, problem: NlpProblem, weights: Sequence[float], multipliers: Sequence[Optional[np.ndarray]]):
        self.problem = problem
        self.weights = list(weights)
        self.multipliers = list(multipliers)

    def __call__(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        f, grad = self.problem.objective(x)
        merit = float(f)
        grad = np.array(grad, dtype=float)
        for constraint, w, lam in zip(self.problem.soft_constraints, self.weights, self.multipliers):
            g = np.asarray(constraint.fun(x), dtype=float)
            lam = np.zeros_like(g) if lam is None else lam
            shifted = np.maximum(0.0, lam + w * g)
            merit += float(np.sum(shifted**2 - lam**2)) / (2.0 * w)
            grad += constraint.vjp(x, shifted)
        return merit, grad


def _violation(problem: NlpProblem, x: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    values = [np.asarray(c.fun(x), dtype=float) for c in problem.soft_constraints]
    worst = max((float(np.max(v, initial=0.0)) for v in values), default=0.0)
    return max(worst, 0.0), values


def _initial_inverse_hessian(g_free: np.ndarray, gamma: Optional[float]) -> np.ndarray:
    """Scaled identity: the last curvature estimate, else a first step of max norm at most one."""
    h0 = gamma if gamma is not None else 1.0 / max(1.0, float(np.max(np.abs(g_free))))
    return h0 * np.eye(g_free.size)


def _projected_bfgs(
    merit: _Merit,
    problem: NlpProblem,
    x: np.ndarray,
    tolerances: Tolerances,
    budget: int,
    history: List[float],
) -> Tuple[np.ndarray, float, float, int, SolveStatus]:
    lower, upper = problem.lower, problem.upper
    f, g = merit(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise SolverError("objective or gradient is not finite at the starting point")
    history.append(f)
    residual = float(np.linalg.norm(projected_gradient(x, g, lower, upper)))

    # H approximates the inverse Hessian on the free variables only.
    H: Optional[np.ndarray] = None
    free_prev: Optional[np.ndarray] = None
    gamma: Optional[float] = None

    for iteration in range(budget):
        pg = projected_gradient(x, g, lower, upper)
        residual = float(np.linalg.norm(pg))
        if residual <= tolerances.gtol:
            return x, f, residual, iteration, SolveStatus.CONVERGED

        free = pg != 0.0
        if free_prev is not None and not np.array_equal(free, free_prev):
            H = None
        free_prev = free
        g_free = g[free]
        if H is None:
            H = _initial_inverse_hessian(g_free, gamma)

        d = np.zeros_like(x)
        d[free] = -H @ g_free
        if g @ d >= 0.0:
            H = _initial_inverse_hessian(g_free, gamma)
            d[free] = -H @ g_free

        step = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            x_new = np.clip(x + step * d, lower, upper)
            s = x_new - x
            if not np.any(s):
                break
            f_new, g_new = merit(x_new)
            gs = min(float(g @ s), 0.0)
            if np.isfinite(f_new) and (
                f_new <= f + ARMIJO_C1 * gs or (f_new <= f and -gs <= ROUNDOFF * max(1.0, abs(f)))
            ):
                accepted = True
                break
            step *= 0.5

        if not accepted:
            return x, f, residual, iteration, SolveStatus.LINE_SEARCH_FAILED

        s_free = s[free]
        y_free = (g_new - g)[free]
        sy = float(s_free @ y_free)
        if sy > 1e-12 * np.linalg.norm(s_free) * np.linalg.norm(y_free):
            rho = 1.0 / sy
            V = np.eye(s_free.size) - rho * np.outer(s_free, y_free)
            H = V @ H @ V.T + rho * np.outer(s_free, s_free)
            gamma = sy / float(y_free @ y_free)

        x, f, g = x_new, float(f_new), g_new
        history.append(f)
        if np.linalg.norm(s) <= tolerances.xtol * (1.0 + np.linalg.norm(x)):
            residual = float(np.linalg.norm(projected_gradient(x, g, lower, upper)))
            return x, f, residual, iteration + 1, SolveStatus.STEP_TOLERANCE

    return x, f, residual, budget, SolveStatus.MAX_ITERATIONS


def minimize(
    problem: NlpProblem,
    x0: ArrayLike,
    tolerances: Optional[Tolerances] = None,
    max_iters: Optional[int] = None,
) -> SolveReport:
    """Minimize a box-constrained problem with penalized soft constraints.

    Args:
        problem: Problem definition
        x0: Starting point (projected onto the box)
        tolerances: Termination settings
        max_iters: Overrides ``tolerances.max_iters`` when given

    Returns:
        SolveReport whose solution lies inside the box; ``residual`` is measured
        in the scaled variables

    Raises:
        SolverError: If the objective or gradient is not finite at ``x0``
    """
    tolerances = tolerances or Tolerances()
    budget = tolerances.max_iters if max_iters is None else max_iters
    scale = np.ones(problem.dim) if problem.scale is None else problem.scale
    original = problem
    problem = problem.scaled()
    x = problem.project(np.asarray(x0, dtype=float) / scale)

    weights = [c.weight for c in problem.soft_constraints]
    multipliers: List[Optional[np.ndarray]] = [None] * len(weights)
    rounds = max(1, tolerances.penalty_rounds) if problem.soft_constraints else 1

    history: List[float] = []
    used = 0
    merit_value = np.nan
    residual = np.nan
    status = SolveStatus.MAX_ITERATIONS
    previous_violation = np.inf
    violation = 0.0
    completed = 0

    for round_index in range(rounds):
        merit = _Merit(problem, weights, multipliers)
        history = []
        x, merit_value, residual, iterations, status = _projected_bfgs(
            merit, problem, x, tolerances, max(budget - used, 0), history
        )
        used += iterations
        completed = round_index + 1
        violation, values = _violation(problem, x)
        if violation <= tolerances.constraint_tol or round_index == rounds - 1 or used >= budget:
            break
        for j, g in enumerate(values):
            lam = np.zeros_like(g) if multipliers[j] is None else multipliers[j]
            multipliers[j] = np.maximum(0.0, lam + weights[j] * g)
            if violation > 0.25 * previous_violation:
                weights[j] *= 2.0
        previous_violation = violation
        logger.debug(
            f"Penalty round {completed}: violation {violation:.3g}, weights {[f'{w:.3g}' for w in weights]}"
        )

    x = np.clip(scale * x, original.lower, original.upper)
    fun, _ = original.objective(x)
    return SolveReport(
        x=x,
        fun=float(fun),
        merit=float(merit_value),
        iterations=used,
        residual=float(residual),
        max_violation=float(violation),
        status=status,
        rounds=completed,
        merit_history=history,
    )


def grad_check(problem: NlpProblem, x: ArrayLike, h: float = 1e-5) -> float:
    """Compare the analytic merit gradient with central finite differences.

    Args:
        problem: Problem definition (penalties at their initial weights)
        x: Interior evaluation point
        h: Finite-difference step

    Returns:
        Max-norm error relative to the larger of the two gradients' max norms
    """
    x = np.asarray(x, dtype=float)
    merit = _Merit(problem, [c.weight for c in problem.soft_constraints], [None] * len(problem.soft_constraints))
    _, analytic = merit(x)
    numeric = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        numeric[i] = (merit(x + e)[0] - merit(x - e)[0]) / (2.0 * h)
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / scale)
