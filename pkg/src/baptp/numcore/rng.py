"""The toolkit's random number source.

Everything stochastic (weight init, dropout masks, batch shuffling, synthetic
scenes) draws from a counter-based Philox generator built here, so a seed
fully determines a run.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed``; extra integers select an independent sub-stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))
