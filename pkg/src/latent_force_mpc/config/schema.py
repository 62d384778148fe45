"""Experiment configuration schema and loaders."""

import json
import logging
import math
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from latent_force_mpc.core.errors import ConfigurationError
from latent_force_mpc.estimation.particle_filter import ResamplePolicy
from latent_force_mpc.gp.kernels import KernelSpec
from latent_force_mpc.optim.nlp import Tolerances

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_NAME = "case_study.json"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _square(name: str, value: List[List[float]]) -> np.ndarray:
    matrix = np.asarray(value, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T):
        raise ValueError(f"{name} must be symmetric")
    return matrix


class SolverConfig(_Strict):
    """NLP tolerances and penalty settings."""

    gtol: float = Field(1e-6, gt=0.0)
    xtol: float = Field(1e-9, gt=0.0)
    max_iters: int = Field(200, ge=1)
    penalty_weight: float = Field(1e3, gt=0.0)
    penalty_rounds: int = Field(3, ge=1)
    constraint_tol: float = Field(1e-4, gt=0.0)

    def tolerances(self) -> Tolerances:
        return Tolerances(
            gtol=self.gtol,
            xtol=self.xtol,
            max_iters=self.max_iters,
            constraint_tol=self.constraint_tol,
            penalty_rounds=self.penalty_rounds,
        )


class VelocityBoundsConfig(_Strict):
    v_min: float = 0.0
    v_max: float = 8.0

    @model_validator(mode="after")
    def _ordered(self) -> "VelocityBoundsConfig":
        if self.v_min > self.v_max:
            raise ValueError(f"v_min {self.v_min} exceeds v_max {self.v_max}")
        return self


class StateConstraintsConfig(_Strict):
    """Description of the state constraint set.

    Each entry may be null to drop that constraint family.
    """

    velocity: Optional[VelocityBoundsConfig] = Field(default_factory=VelocityBoundsConfig)
    corridor: bool = True
    corridor_margin: float = Field(0.15, ge=0.0)
    position: bool = True

    @classmethod
    def none(cls) -> "StateConstraintsConfig":
        return cls(velocity=None, corridor=False, position=False)


class MpcConfig(_Strict):
    """Scenario MPC settings.

    Matrices are given as nested lists; inputs are in SI units (steering in
    radians).
    """

    N: int = Field(7, ge=1)
    Ns: int = Field(150, ge=1)
    dt: float = Field(0.2, gt=0.0)
    Q: List[List[float]] = [[2.0, 0, 0, 0], [0, 2.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 0.0]]
    Qf: List[List[float]] = [[2.0, 0, 0, 0], [0, 2.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 0.0]]
    R: List[List[float]] = [[0.5, 0], [0, 10.0]]
    x_goal: List[float] = [60.0, 0.0, 0.0, 0.0]
    u_lower: List[float] = [-5.0, -math.radians(25.0)]
    u_upper: List[float] = [5.0, math.radians(25.0)]
    state_constraints: StateConstraintsConfig = Field(default_factory=StateConstraintsConfig)
    epsilon: float = Field(0.05, gt=0.0, lt=1.0)
    goal_radius: float = Field(0.3, gt=0.0)
    warm_start: bool = True
    solver: SolverConfig = Field(default_factory=SolverConfig)

    @field_validator("Q", "Qf")
    @classmethod
    def _psd(cls, value: List[List[float]]) -> List[List[float]]:
        matrix = _square("state weight", value)
        if np.min(np.linalg.eigvalsh(matrix)) < -1e-12:
            raise ValueError("state weights must be positive semidefinite")
        return value

    @field_validator("R")
    @classmethod
    def _pd(cls, value: List[List[float]]) -> List[List[float]]:
        matrix = _square("R", value)
        if np.min(np.linalg.eigvalsh(matrix)) <= 0.0:
            raise ValueError("R must be positive definite")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "MpcConfig":
        n_x = len(self.x_goal)
        if len(self.Q) != n_x or len(self.Qf) != n_x:
            raise ValueError(f"Q and Qf must be {n_x}x{n_x} to match x_goal")
        n_u = len(self.R)
        if len(self.u_lower) != n_u or len(self.u_upper) != n_u:
            raise ValueError(f"input bounds must have {n_u} entries to match R")
        if any(lo > hi for lo, hi in zip(self.u_lower, self.u_upper)):
            raise ValueError("u_lower exceeds u_upper")
        return self

    @property
    def n_x(self) -> int:
        return len(self.x_goal)

    @property
    def n_u(self) -> int:
        return len(self.R)

    def weights(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Q, Qf, R) as arrays."""
        return np.asarray(self.Q, dtype=float), np.asarray(self.Qf, dtype=float), np.asarray(self.R, dtype=float)

    def input_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.u_lower, dtype=float), np.asarray(self.u_upper, dtype=float)

    def goal(self) -> np.ndarray:
        return np.asarray(self.x_goal, dtype=float)


class TrackSpec(_Strict):
    """Sinusoidal road: centerline y = A·sin(2πx/P) with a constant half-width."""

    amplitude: float = 4.0
    period: float = Field(30.0, gt=0.0)
    half_width: float = Field(2.0, gt=0.0)
    x_min: float = 0.0
    x_max: float = 60.0

    @model_validator(mode="after")
    def _range(self) -> "TrackSpec":
        if self.x_min >= self.x_max:
            raise ValueError(f"x_min {self.x_min} must be below x_max {self.x_max}")
        return self


class ModelConfig(_Strict):
    """Vehicle and measurement parameters."""

    length: float = Field(0.5, gt=0.0)
    disturbance_map: List[int] = [2]
    observed: List[int] = [0, 1, 2, 3]
    measurement_std: List[float] = [0.05, 0.05, 0.05, 0.01]

    @field_validator("measurement_std")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if any(not s > 0.0 for s in value):
            raise ValueError("measurement standard deviations must be positive")
        return value

    @model_validator(mode="after")
    def _sizes(self) -> "ModelConfig":
        if len(self.observed) != len(self.measurement_std):
            raise ValueError("observed and measurement_std must have the same length")
        return self


class EstimatorMode(str, Enum):
    PARTICLE_FILTER = "particle_filter"
    ORACLE = "oracle"


class FilterConfig(_Strict):
    mode: EstimatorMode = EstimatorMode.PARTICLE_FILTER
    n_particles: int = Field(7000, ge=1)
    resample: ResamplePolicy = ResamplePolicy.ALWAYS
    ess_fraction: float = Field(0.5, gt=0.0, le=1.0)


class DegradedPolicy(str, Enum):
    """What the loop applies when a solve does not converge."""

    HOLD = "hold"
    APPLY = "apply"


class RunConfig(_Strict):
    seed: int = Field(0, ge=0)
    max_steps: int = Field(300, ge=1)
    start: List[float] = [0.0, 0.0, 0.0, 0.0]
    substeps: int = Field(1, ge=1)
    degraded_policy: DegradedPolicy = DegradedPolicy.HOLD
    max_holds: int = Field(3, ge=0)


class ExperimentConfig(_Strict):
    """Everything a closed-loop run depends on besides the seed."""

    kernel: KernelSpec = Field(default_factory=KernelSpec)
    truth_kernel: Optional[KernelSpec] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    mpc: MpcConfig = Field(default_factory=MpcConfig)
    track: TrackSpec = Field(default_factory=TrackSpec)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    run: RunConfig = Field(default_factory=RunConfig)

    @model_validator(mode="after")
    def _cross_checks(self) -> "ExperimentConfig":
        n_x = self.mpc.n_x
        if len(self.run.start) != n_x:
            raise ValueError(f"run.start needs {n_x} entries, got {len(self.run.start)}")
        if any(not 0 <= i < n_x for i in self.model.observed):
            raise ValueError("model.observed must index physical states only")
        if any(not 0 <= i < n_x for i in self.model.disturbance_map):
            raise ValueError("model.disturbance_map must index physical states")
        if self.filter.mode == EstimatorMode.ORACLE and self.truth_kernel is not None:
            raise ValueError("oracle estimation needs the truth and controller latent models to match")
        Q, Qf, _ = self.mpc.weights()
        if n_x == 4 and (Q[3, 3] != 0.0 or Qf[3, 3] != 0.0):
            logger.warning("Heading weight is non-zero; the heading is not wrapped inside the cost")
        return self

    @property
    def effective_truth_kernel(self) -> KernelSpec:
        return self.truth_kernel or self.kernel


def _validate(data: Any, source: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment config {source}: {e}", e.errors()) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load an experiment config from JSON or YAML.

    Args:
        path: Config file (.json, .yml or .yaml)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigurationError: If the file is missing, unparseable or invalid
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config not found: {path}")
    text = path.read_text()
    try:
        if path.suffix in (".yml", ".yaml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Cannot parse {path}: {e}") from e
    config = _validate(data or {}, str(path))
    logger.info(f"Loaded config from {path}")
    return config


def default_config() -> ExperimentConfig:
    """The packaged case-study configuration."""
    text = resources.files("latent_force_mpc.config").joinpath(DEFAULT_CONFIG_NAME).read_text()
    return _validate(json.loads(text), DEFAULT_CONFIG_NAME)


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    particles: Optional[int] = None,
    scenarios: Optional[int] = None,
    max_steps: Optional[int] = None,
) -> ExperimentConfig:
    """Return a re-validated copy with CLI overrides applied."""
    data = config.model_dump(mode="json")
    if seed is not None:
        data["run"]["seed"] = seed
    if particles is not None:
        data["filter"]["n_particles"] = particles
    if scenarios is not None:
        data["mpc"]["Ns"] = scenarios
    if max_steps is not None:
        data["run"]["max_steps"] = max_steps
    return _validate(data, "with overrides")
