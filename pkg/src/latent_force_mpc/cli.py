"""Command-line interface for Latent Force MPC."""

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from latent_force_mpc.config.schema import ExperimentConfig, apply_overrides, default_config, load_config
from latent_force_mpc.core.errors import LatentForceMpcError
from latent_force_mpc.gp.checks import equivalence_checks
from latent_force_mpc.gp.kernels import KernelSpec
from latent_force_mpc.gp.state_space import discretize_exact, matern_to_sde
from latent_force_mpc.simulation.metrics import RunMetrics, compute_metrics, summarize_sweep
from latent_force_mpc.simulation.runner import run_experiment, run_sweep
from latent_force_mpc.storage.run_store import emit_outputs
from latent_force_mpc.utils.logging import setup_logging

app = typer.Typer(
    name="lfmpc",
    help="Scenario MPC for latent force models - closed-loop vehicle case study",
    no_args_is_help=True,
)
console = Console()
logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = Path("./runs")

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Experiment config (JSON or YAML)")
LOG_LEVEL_OPTION = typer.Option("WARNING", "--log-level", help="Logging level (DEBUG, INFO, WARNING, ERROR)")
LOG_FORMAT_OPTION = typer.Option("json", "--log-format", help="Log format: json or text")


def _load(
    config_path: Optional[Path],
    seed: Optional[int] = None,
    particles: Optional[int] = None,
    scenarios: Optional[int] = None,
    max_steps: Optional[int] = None,
) -> ExperimentConfig:
    try:
        config = load_config(config_path) if config_path else default_config()
        return apply_overrides(config, seed=seed, particles=particles, scenarios=scenarios, max_steps=max_steps)
    except LatentForceMpcError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)


def _metrics_table(title: str, rows: dict) -> Table:
    table = Table(title=title, show_header=True, header_style="bold magenta")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    for key, value in rows.items():
        if isinstance(value, float):
            value = f"{value:.4g}"
        table.add_row(key, str(value))
    return table


@app.command()
def run(
    config_path: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Run seed (unsigned 64-bit)"),
    out: Path = typer.Option(DEFAULT_OUT_DIR, "--out", "-o", help="Output directory"),
    particles: Optional[int] = typer.Option(None, "--particles", help="Number of particles N_p"),
    scenarios: Optional[int] = typer.Option(None, "--scenarios", help="Number of scenarios Ns"),
    max_steps: Optional[int] = typer.Option(None, "--max-steps", help="Step budget"),
    log_level: str = LOG_LEVEL_OPTION,
    log_format: str = LOG_FORMAT_OPTION,
) -> None:
    """Run one closed-loop experiment and write its log, plots and summary."""
    setup_logging(level=log_level, format_type=log_format)
    config = _load(config_path, seed, particles, scenarios, max_steps)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        console=console,
    ) as progress:
        task = progress.add_task(f"Simulating seed {config.run.seed}", total=config.run.max_steps)
        run_log = run_experiment(config, progress=lambda _: progress.advance(task))

    try:
        files = emit_outputs(run_log, config, out)
    except LatentForceMpcError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)

    frame = run_log.to_frame()
    if not frame.empty:
        metrics = compute_metrics(frame, config, run_log.seed, run_log.status.value)
        console.print(_metrics_table("Run summary", metrics.to_dict()))
    console.print(f"Wrote {len(files)} files to [bold]{out}[/bold]")

    if run_log.failed:
        console.print(f"[red]✗ Run failed:[/red] {run_log.error}")
        raise typer.Exit(1)
    console.print(f"[green]✓ Run finished: {run_log.status.value}[/green]")


@app.command("dump-ssm")
def dump_ssm(
    config_path: Optional[Path] = CONFIG_OPTION,
    sigma2: Optional[float] = typer.Option(None, "--sigma2", help="Override kernel variance"),
    ell: Optional[float] = typer.Option(None, "--ell", help="Override kernel length scale"),
    nu: Optional[float] = typer.Option(None, "--nu", help="Override smoothness (0.5, 1.5, 2.5)"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Also print the exact discretization at this step"),
) -> None:
    """Print the latent SDE (A, B, C, q, Pinf) of the configured kernel as JSON."""
    config = _load(config_path)
    updates = {k: v for k, v in {"sigma2": sigma2, "ell": ell, "nu": nu}.items() if v is not None}
    try:
        spec = KernelSpec.model_validate({**config.kernel.model_dump(), **updates})
        sde = matern_to_sde(spec)
        document = {"kernel": spec.model_dump(), "lambda": spec.lam, "sde": sde.to_dict()}
        if dt is not None:
            disc = discretize_exact(sde, dt)
            document["discrete"] = {"dt": disc.dt, "Ad": disc.Ad.tolist(), "Qd": disc.Qd.tolist()}
    except (LatentForceMpcError, ValueError) as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(1)
    console.print_json(json.dumps(document))


@app.command()
def validate(
    config_path: Optional[Path] = CONFIG_OPTION,
    dt: Optional[float] = typer.Option(None, "--dt", help="Discretization step (defaults to the MPC step)"),
) -> None:
    """Check the kernel / state-space equivalence for every supported smoothness."""
    config = _load(config_path)
    results = equivalence_checks(config.kernel, config.mpc.dt if dt is None else dt)

    table = Table(title="Kernel / SDE equivalence", show_header=True, header_style="bold magenta")
    table.add_column("Check", style="cyan")
    table.add_column("nu", style="yellow")
    table.add_column("Error")
    table.add_column("Tolerance")
    table.add_column("Result")
    for result in results:
        table.add_row(
            result.name,
            f"{result.nu:g}",
            f"{result.error:.3e}",
            f"{result.tolerance:.0e}",
            "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]",
        )
    console.print(table)

    failed = [r for r in results if not r.passed]
    if failed:
        console.print(f"[red]✗ {len(failed)} of {len(results)} checks failed[/red]")
        raise typer.Exit(1)
    console.print(f"[green]✓ All {len(results)} checks passed[/green]")


@app.command()
def sweep(
    config_path: Optional[Path] = CONFIG_OPTION,
    seeds: int = typer.Option(20, "--seeds", "-n", help="Number of seeds"),
    first_seed: int = typer.Option(0, "--first-seed", help="First seed of the range"),
    out: Path = typer.Option(DEFAULT_OUT_DIR / "sweep", "--out", "-o", help="Output directory"),
    particles: Optional[int] = typer.Option(None, "--particles", help="Number of particles N_p"),
    scenarios: Optional[int] = typer.Option(None, "--scenarios", help="Number of scenarios Ns"),
    max_steps: Optional[int] = typer.Option(None, "--max-steps", help="Step budget per run"),
    save_runs: bool = typer.Option(False, "--save-runs", help="Also write every run's artifacts"),
    log_level: str = LOG_LEVEL_OPTION,
    log_format: str = LOG_FORMAT_OPTION,
) -> None:
    """Run a seed range and report closed-loop acceptance statistics."""
    setup_logging(level=log_level, format_type=log_format)
    config = _load(config_path, None, particles, scenarios, max_steps)
    out.mkdir(parents=True, exist_ok=True)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        console=console,
    ) as progress:
        task = progress.add_task("Sweeping seeds", total=seeds)
        logs = run_sweep(
            config, range(first_seed, first_seed + seeds), progress=lambda _seed: progress.advance(task)
        )

    results: list[RunMetrics] = []
    for run_log in logs:
        if save_runs:
            emit_outputs(run_log, config, out / f"seed_{run_log.seed}")
        frame = run_log.to_frame()
        if not frame.empty:
            results.append(compute_metrics(frame, config, run_log.seed, run_log.status.value))

    per_run = pd.DataFrame([m.to_dict() for m in results])
    per_run.to_csv(out / "sweep.csv", index=False)
    summary = summarize_sweep(results)
    (out / "sweep-summary.json").write_text(json.dumps(summary, indent=2))
    console.print(_metrics_table(f"Sweep over {seeds} seeds", summary))

    if not results or all(m.status == "failed" for m in results):
        console.print("[red]✗ Every run failed[/red]")
        raise typer.Exit(1)
    if np.isfinite(summary["goal_reach_rate"]):
        console.print(f"Goal reached in {summary['goal_reach_rate']:.0%} of runs")


if __name__ == "__main__":
    app()
