"""Deterministic random-stream derivation.

Every stochastic routine in the package derives its generator from a master
seed plus a structured key (module, run index, ...) via numpy's
``SeedSequence`` spawn keys, so independent runs get independent streams and
the whole pipeline is reproducible from a single integer.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Return the seed sequence for ``key`` under ``master_seed``."""
    return np.random.SeedSequence(master_seed, spawn_key=key)


def spawn_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Return a fresh generator for the stream identified by ``key``."""
    return np.random.default_rng(seed_sequence(master_seed, *key))


def spawn_seed(master_seed: int, *key: int) -> int:
    """Derive a plain integer seed (e.g. for sklearn ``random_state``)."""
    return int(seed_sequence(master_seed, *key).generate_state(1, np.uint32)[0])
