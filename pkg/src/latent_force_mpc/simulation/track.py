"""Sinusoidal road corridor."""

from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike

from latent_force_mpc.config.schema import TrackSpec


def centerline(track: TrackSpec, x: ArrayLike) -> np.ndarray:
    """y_c(x) = A·sin(2πx/P)."""
    return track.amplitude * np.sin(2.0 * np.pi * np.asarray(x, dtype=float) / track.period)


def centerline_slope(track: TrackSpec, x: ArrayLike) -> np.ndarray:
    """dy_c/dx."""
    omega = 2.0 * np.pi / track.period
    return track.amplitude * omega * np.cos(omega * np.asarray(x, dtype=float))


def make_track(track: TrackSpec, x: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Corridor bounds at longitudinal position ``x``.

    Args:
        track: Track geometry
        x: Positions along the x axis (m)

    Returns:
        Tuple of (lower y bound, upper y bound)
    """
    center = centerline(track, x)
    return center - track.half_width, center + track.half_width


def track_polyline(track: TrackSpec, n_points: int = 400) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sampled (x, center, lower, upper) over the track's x-range, for plotting."""
    xs = np.linspace(track.x_min, track.x_max, n_points)
    lower, upper = make_track(track, xs)
    return xs, centerline(track, xs), lower, upper
