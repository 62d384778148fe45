"""Utility modules."""

from latent_force_mpc.utils.logging import setup_logging, get_logger
from latent_force_mpc.utils.hashing import calculate_sha256, calculate_file_sha256
from latent_force_mpc.utils.rng import Stream, derive_rng

__all__ = [
    "setup_logging",
    "get_logger",
    "calculate_sha256",
    "calculate_file_sha256",
    "Stream",
    "derive_rng",
]
