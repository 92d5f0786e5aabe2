"""Splittable seed derivation.

Every random stream in the pipeline is keyed by a tuple of non-negative
integers appended to the master seed, e.g. ``(fold, pair, member)``.  The
derived seed is the first 64-bit word produced by
``numpy.random.SeedSequence(master, spawn_key=keys)``, so a stream depends
only on its key and never on the order in which streams are requested.
"""

from __future__ import annotations

import numpy as np

# Top-level key namespaces, so that e.g. fold 0 of the split stream can never
# collide with fold 0 of the member stream.
KFOLD = 0
SPLIT = 1
MEMBERS = 2


def derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))
