"""Latent Force MPC - scenario-based stochastic MPC for nonlinear latent force models."""

__version__ = "1.0.0"

__all__ = ["__version__"]
