"""Named random substreams derived from one master seed.

Every stochastic component draws from its own `numpy` Generator, keyed by a
fixed stream id (plus optional extra indices such as episode or link
numbers). Changing how one component consumes randomness therefore never
perturbs the draws seen by the others.
"""

from __future__ import annotations

import numpy as np

# Stream ids are append-only; renumbering breaks seed reproducibility.
MOBILITY = 0
BLOCKAGE = 1
FADING = 2
NETWORK_INIT = 3
EXPLORATION = 4
EVAL = 5
ENV_EPISODE = 6
TRAIN_EVAL = 7  # in-training eval episodes, disjoint from the EVAL protocol

SeedLike = "int | np.random.SeedSequence"


def subseed(seed, *key: int) -> np.random.SeedSequence:
    """SeedSequence for substream `key` under `seed` (int or SeedSequence)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key)
        )
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))


def substream(seed, *key: int) -> np.random.Generator:
    """Generator for substream `key` under `seed`."""
    return np.random.default_rng(subseed(seed, *key))
