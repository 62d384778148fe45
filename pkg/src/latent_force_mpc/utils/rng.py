"""Deterministic random-stream derivation.

Every stochastic component draws from its own ``numpy.random.Generator``
derived from ``(run seed, stream, step)`` so a run is a pure function of its
seed regardless of call order between components.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Independent random streams of a closed-loop run."""

    TRUTH_INIT = 0
    TRUTH_NOISE = 1
    MEASUREMENT = 2
    FILTER_INIT = 3
    FILTER_STEP = 4
    SCENARIOS = 5


def derive_rng(seed: int, stream: Stream, step: int = 0) -> np.random.Generator:
    """Return the generator for one stream at one step.

    Args:
        seed: Run seed (unsigned 64-bit)
        stream: Which component consumes the draws
        step: Receding-horizon step index

    Returns:
        Independent PCG64 generator
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(step)]))
