"""Experiment configuration."""

from latent_force_mpc.config.schema import (
    DegradedPolicy,
    EstimatorMode,
    ExperimentConfig,
    FilterConfig,
    ModelConfig,
    MpcConfig,
    RunConfig,
    SolverConfig,
    StateConstraintsConfig,
    TrackSpec,
    VelocityBoundsConfig,
    apply_overrides,
    default_config,
    load_config,
)

__all__ = [
    "DegradedPolicy",
    "EstimatorMode",
    "ExperimentConfig",
    "FilterConfig",
    "ModelConfig",
    "MpcConfig",
    "RunConfig",
    "SolverConfig",
    "StateConstraintsConfig",
    "TrackSpec",
    "VelocityBoundsConfig",
    "apply_overrides",
    "default_config",
    "load_config",
]
