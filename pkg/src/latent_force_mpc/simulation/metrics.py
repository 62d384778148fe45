"""Closed-loop performance metrics computed from a run log."""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from latent_force_mpc.config.schema import ExperimentConfig
from latent_force_mpc.simulation.track import centerline

logger = logging.getLogger(__name__)

# fraction of the corridor half-width around the centerline that counts as cruising
CRUISE_BAND = 0.5
MIN_CRUISE_ROWS = 3


@dataclass
class RunMetrics:
    """Summary statistics of one run."""

    seed: int
    status: str
    steps: int
    goal_reached: bool
    corridor_satisfied: bool
    max_velocity_overshoot: float
    violation_rates: Dict[str, float] = field(default_factory=dict)
    epsilon: float = 0.05
    latent_coverage: float = float("nan")
    cruise_correlation: float = float("nan")
    median_solve_time: float = float("nan")
    degraded_steps: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _velocity_overshoot(frame: pd.DataFrame, config: ExperimentConfig) -> float:
    bounds = config.mpc.state_constraints.velocity
    if bounds is None or frame.empty:
        return 0.0
    v = frame["true_v"].to_numpy(dtype=float)
    return float(max(np.max(v - bounds.v_max, initial=0.0), np.max(bounds.v_min - v, initial=0.0), 0.0))


def latent_coverage(frame: pd.DataFrame) -> float:
    """Fraction of steps where the true disturbance lies inside the estimated 2σ band."""
    if frame.empty:
        return float("nan")
    inside = np.abs(frame["w_true"] - frame["w_est"]) <= frame["w_2sd"]
    return float(inside.mean())


def cruise_correlation(frame: pd.DataFrame, config: ExperimentConfig) -> float:
    """Correlation of applied acceleration with the estimated disturbance while cruising.

    Cruising steps have the velocity inside its bounds and the vehicle within
    half the corridor half-width of the centerline. Returns NaN when fewer than
    three such steps exist or either series is constant.
    """
    rows = frame.dropna(subset=["u_accel"])
    if rows.empty:
        return float("nan")
    mask = np.ones(len(rows), dtype=bool)
    bounds = config.mpc.state_constraints.velocity
    if bounds is not None:
        v = rows["true_v"].to_numpy(dtype=float)
        mask &= (v >= bounds.v_min) & (v <= bounds.v_max)
    offset = rows["true_py"].to_numpy(dtype=float) - centerline(config.track, rows["true_px"].to_numpy(dtype=float))
    mask &= np.abs(offset) <= CRUISE_BAND * config.track.half_width
    accel = rows["u_accel"].to_numpy(dtype=float)[mask]
    w_est = rows["w_est"].to_numpy(dtype=float)[mask]
    if accel.size < MIN_CRUISE_ROWS or np.std(accel) == 0.0 or np.std(w_est) == 0.0:
        return float("nan")
    return float(np.corrcoef(accel, w_est)[0, 1])


def compute_metrics(frame: pd.DataFrame, config: ExperimentConfig, seed: int, status: str) -> RunMetrics:
    """Evaluate a run log against the true (untightened) constraints.

    Args:
        frame: Run log as a DataFrame
        config: Configuration the run used
        seed: Run seed
        status: Final run status

    Returns:
        RunMetrics
    """
    violation_columns = [c for c in frame.columns if c.startswith("viol_")]
    rates = {c[len("viol_") :]: float((frame[c] > 0.0).mean()) if len(frame) else 0.0 for c in violation_columns}
    corridor_ok = bool((frame["viol_corridor"] <= 0.0).all()) if "viol_corridor" in frame else True
    solve_times = frame["solve_time"].dropna()
    metrics = RunMetrics(
        seed=seed,
        status=status,
        steps=int(frame["u_accel"].notna().sum()) if "u_accel" in frame else len(frame),
        goal_reached=status == "goal_reached",
        corridor_satisfied=corridor_ok,
        max_velocity_overshoot=_velocity_overshoot(frame, config),
        violation_rates=rates,
        epsilon=config.mpc.epsilon,
        latent_coverage=latent_coverage(frame),
        cruise_correlation=cruise_correlation(frame, config),
        median_solve_time=float(solve_times.median()) if len(solve_times) else float("nan"),
        degraded_steps=int((frame["degraded"] > 0).sum()),
    )
    for name, rate in rates.items():
        if rate > config.mpc.epsilon:
            logger.warning(f"Seed {seed}: {name} violated at {rate:.1%} of steps (epsilon {config.mpc.epsilon})")
    return metrics


def summarize_sweep(metrics: List[RunMetrics]) -> Dict[str, float]:
    """Aggregate acceptance statistics over a seed sweep."""
    if not metrics:
        return {}
    reached = [m for m in metrics if m.goal_reached]
    return {
        "runs": len(metrics),
        "goal_reach_rate": len(reached) / len(metrics),
        "corridor_satisfied_rate": (
            float(np.mean([m.corridor_satisfied for m in reached])) if reached else float("nan")
        ),
        "max_velocity_overshoot": float(np.max([m.max_velocity_overshoot for m in metrics])),
        "median_latent_coverage": float(np.nanmedian([m.latent_coverage for m in metrics])),
        "median_cruise_correlation": float(np.nanmedian([m.cruise_correlation for m in metrics])),
        "median_solve_time": float(np.nanmedian([m.median_solve_time for m in metrics])),
        "failed_runs": sum(m.status == "failed" for m in metrics),
    }
