"""Closed-loop simulation: track geometry, experiment runner, metrics and plots."""
