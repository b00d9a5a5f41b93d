"""Seeded, counter-based random streams.

Every random draw in the package goes through :func:`make_rng`, which keys a
Philox generator on ``(seed, *stream)``.  Independent restarts or trials use
distinct stream tuples, so results do not depend on execution order.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), *[int(s) for s in stream]])
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng_or_seed) -> np.random.Generator:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return make_rng(0 if rng_or_seed is None else rng_or_seed)
