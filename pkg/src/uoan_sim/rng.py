"""Seeded RNG substreams for reproducible parallel Monte Carlo trials."""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key...), stable across platforms.

    Every trial (and every purpose within a trial) gets its own spawn key,
    so results do not depend on execution order or worker scheduling.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
