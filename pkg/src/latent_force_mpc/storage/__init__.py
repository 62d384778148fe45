"""Run artifact storage."""

from latent_force_mpc.storage.run_store import RunStore, emit_outputs, load_run_csv

__all__ = ["RunStore", "emit_outputs", "load_run_csv"]
