"""SVG figures of a closed-loop run."""

import logging
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from latent_force_mpc.config.schema import ExperimentConfig  # noqa: E402
from latent_force_mpc.simulation.track import track_polyline  # noqa: E402

logger = logging.getLogger(__name__)

SVG_SETTINGS = {"svg.hashsalt": "latent-force-mpc", "svg.fonttype": "none"}
FIGSIZE = (8.0, 4.5)


def _band(ax, t, mean, half_width, color: str, label: str) -> None:
    ax.plot(t, mean, color=color, linestyle="--", label=f"{label} estimate")
    ax.fill_between(t, mean - half_width, mean + half_width, color=color, alpha=0.2, label="2σ bound")


def trajectory_figure(frame: pd.DataFrame, config: ExperimentConfig) -> Figure:
    """Vehicle path over the road corridor."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    xs, center, lower, upper = track_polyline(config.track)
    ax.plot(xs, center, color="0.6", linestyle=":", linewidth=1.0, label="centerline")
    ax.plot(xs, lower, color="k", linewidth=1.2, label="road boundary")
    ax.plot(xs, upper, color="k", linewidth=1.2)
    ax.plot(frame["true_px"], frame["true_py"], color="tab:blue", label="vehicle")
    goal = config.mpc.goal()
    ax.add_patch(plt.Circle((goal[0], goal[1]), config.mpc.goal_radius, color="tab:green", alpha=0.4))
    ax.set_xlabel("$p_x$ (m)")
    ax.set_ylabel("$p_y$ (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    return fig


def latent_figure(frame: pd.DataFrame) -> Figure:
    """True and estimated latent disturbance."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(frame["t"], frame["w_true"], color="k", label="true $w$")
    _band(ax, frame["t"], frame["w_est"], frame["w_2sd"], "tab:orange", "$w$")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("$w$ (m/s²)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    return fig


def acceleration_figure(frame: pd.DataFrame, config: ExperimentConfig) -> Figure:
    """Applied acceleration against the estimated disturbance."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.step(frame["t"], frame["u_accel"], where="post", color="tab:blue", label="acceleration $a$")
    ax.plot(frame["t"], frame["w_est"], color="tab:orange", linestyle="--", label="estimated $w$")
    lower, upper = config.mpc.input_box()
    ax.axhline(lower[0], color="tab:red", linewidth=0.8)
    ax.axhline(upper[0], color="tab:red", linewidth=0.8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("m/s²")
    ax.legend(fontsize="small")
    fig.tight_layout()
    return fig


def velocity_figure(frame: pd.DataFrame, config: ExperimentConfig) -> Figure:
    """True and estimated velocity with the velocity bounds."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(frame["t"], frame["true_v"], color="k", label="true $v$")
    _band(ax, frame["t"], frame["est_v"], frame["est_v_2sd"], "tab:blue", "$v$")
    bounds = config.mpc.state_constraints.velocity
    if bounds is not None:
        ax.axhline(bounds.v_min, color="tab:red", linewidth=0.8)
        ax.axhline(bounds.v_max, color="tab:red", linewidth=0.8, label="bounds")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("$v$ (m/s)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    return fig


def build_figures(frame: pd.DataFrame, config: ExperimentConfig) -> Dict[str, Figure]:
    return {
        "trajectory": trajectory_figure(frame, config),
        "latent": latent_figure(frame),
        "acceleration": acceleration_figure(frame, config),
        "velocity": velocity_figure(frame, config),
    }


def save_svg(fig: Figure, path: Path) -> Path:
    """Write a byte-reproducible SVG and close the figure."""
    with plt.rc_context(SVG_SETTINGS):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_run(frame: pd.DataFrame, config: ExperimentConfig, out_dir: Path) -> List[Path]:
    """Render every run figure to ``out_dir``.

    Returns:
        Paths written; empty for an empty log
    """
    if frame.empty:
        logger.warning("Empty run log, no plots written")
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [save_svg(fig, out_dir / f"{name}.svg") for name, fig in build_figures(frame, config).items()]
    logger.info(f"Saved {len(paths)} plots to {out_dir}")
    return paths
