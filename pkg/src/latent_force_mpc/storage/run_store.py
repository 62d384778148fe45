"""Output directory manager for closed-loop runs."""

import json
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from latent_force_mpc.config.schema import ExperimentConfig
from latent_force_mpc.core.errors import OutputError
from latent_force_mpc.simulation.metrics import compute_metrics
from latent_force_mpc.simulation.plots import plot_run
from latent_force_mpc.simulation.runner import RunLog
from latent_force_mpc.utils.hashing import calculate_file_sha256, calculate_sha256

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
# wall-clock columns, kept out of run.csv
TIMING_COLUMNS = ["solve_time"]
SCHEMA_VERSION = "1.0"


@dataclass
class FileMetadata:
    """Manifest entry of one emitted file."""

    name: str
    sha256: str
    rows: int
    columns: int
    size_bytes: int


class RunStore:
    """Writes the artifacts of one run below a single directory.

    Layout::

        <out_dir>/run.csv
        <out_dir>/timings.csv
        <out_dir>/config-echo.json
        <out_dir>/summary.json
        <out_dir>/plots/*.svg
        <out_dir>/manifest.json
    """

    def __init__(self, out_dir: Union[str, Path], plots_dir: str = "plots"):
        self.out_dir = Path(out_dir)
        self.plots_dir = self.out_dir / plots_dir
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create output directory: {e}", self.out_dir) from e

    def _write_text(self, path: Path, text: str) -> Path:
        try:
            path.write_text(text)
        except OSError as e:
            raise OutputError(f"Cannot write {path.name}: {e}", path) from e
        return path

    def _write_csv(self, frame: pd.DataFrame, filename: str) -> Path:
        path = self.out_dir / filename
        try:
            frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise OutputError(f"Cannot write {filename}: {e}", path) from e
        return path

    def save_log(self, frame: pd.DataFrame, filename: str = "run.csv") -> Path:
        """Write the run log with full float precision, timing columns excluded."""
        path = self._write_csv(frame.drop(columns=TIMING_COLUMNS, errors="ignore"), filename)
        logger.info(f"Saved run log: {path} ({len(frame)} rows)")
        return path

    def save_timings(self, frame: pd.DataFrame, filename: str = "timings.csv") -> Path:
        """Write the wall-clock columns keyed by step."""
        present = [c for c in TIMING_COLUMNS if c in frame.columns]
        return self._write_csv(frame[["step"] + present], filename)

    def save_config(self, config: ExperimentConfig, seed: int) -> Path:
        document = config.model_dump(mode="json")
        echo = {
            "seed": seed,
            "config_sha256": calculate_sha256(json.dumps(document, sort_keys=True)),
            "config": document,
        }
        return self._write_text(self.out_dir / "config-echo.json", json.dumps(echo, indent=2))

    def save_summary(self, summary: Dict[str, Any]) -> Path:
        path = self._write_text(self.out_dir / "summary.json", json.dumps(summary, indent=2, default=str))
        logger.info(f"Saved summary: {path}")
        return path

    def save_plots(self, frame: pd.DataFrame, config: ExperimentConfig) -> List[Path]:
        try:
            return plot_run(frame, config, self.plots_dir)
        except OSError as e:
            raise OutputError(f"Cannot write plots: {e}", self.plots_dir) from e

    def get_file_metadata(self, file_path: Path) -> Dict[str, Any]:
        """Hash and size of an emitted file; row/column counts for CSV."""
        rows = columns = 0
        if file_path.suffix == ".csv":
            frame = load_run_csv(file_path)
            rows, columns = frame.shape
        meta = FileMetadata(
            name=str(file_path.relative_to(self.out_dir)),
            sha256=calculate_file_sha256(file_path),
            rows=rows,
            columns=columns,
            size_bytes=file_path.stat().st_size,
        )
        return meta.__dict__.copy()

    def save_manifest(self, files: List[Path], status: str, seed: int, error: Optional[str] = None) -> Path:
        manifest = {
            "seed": seed,
            "status": status,
            "error": error,
            "file_count": len(files),
            "files": [self.get_file_metadata(f) for f in files],
            "schema_version": SCHEMA_VERSION,
            "created_at": datetime.now().isoformat(),
        }
        path = self._write_text(self.out_dir / "manifest.json", json.dumps(manifest, indent=2))
        logger.info(f"Saved manifest: {path}")
        return path


def emit_outputs(run_log: RunLog, config: ExperimentConfig, out_dir: Union[str, Path]) -> List[Path]:
    """Write the CSV log, config echo, metrics summary, plots and manifest.

    An empty log yields a header-only CSV and no plots.

    Args:
        run_log: Log of a finished (or failed) run
        config: Configuration the run used
        out_dir: Target directory

    Returns:
        Paths of every file written, manifest last

    Raises:
        OutputError: On any I/O failure, with the offending path
    """
    store = RunStore(out_dir)
    frame = run_log.to_frame()
    files = [store.save_log(frame), store.save_timings(frame), store.save_config(config, run_log.seed)]
    if frame.empty:
        logger.warning("Run log is empty; writing header-only CSV")
    else:
        metrics = compute_metrics(frame, config, run_log.seed, run_log.status.value)
        files.append(store.save_summary(metrics.to_dict()))
        files.extend(store.save_plots(frame, config))
    files.append(store.save_manifest(files, run_log.status.value, run_log.seed, run_log.error))
    return files


def load_run_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Parse a run log written by :meth:`RunStore.save_log`."""
    path = Path(path)
    if not path.exists():
        raise OutputError("Run log not found", path)
    return pd.read_csv(path, float_precision="round_trip")
