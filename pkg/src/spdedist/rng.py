"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
a tuple ``(seed, purpose, index, ...)`` through ``numpy.random.SeedSequence``.
The key, not the order in which work is scheduled, determines the
numbers, so results do not depend on how many workers are used.

Purpose codes
-------------
1  Brownian panels, indexed by path (then by refinement level)
2  stochastic bound tables, indexed by block
3  Nagumo batch sampling
4  random test/diagnostic curves
5  random starting points, indexed by path
"""
from __future__ import annotations

import numpy as np

PANEL = 1
BOUNDS = 2
NAGUMO = 3
CURVES = 4
STARTS = 5


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the key ``(seed, *keys)``."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return np.random.Generator(np.random.Philox(ss))
