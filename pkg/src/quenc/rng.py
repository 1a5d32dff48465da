"""Seeding helpers.

All randomness in the package flows through Philox generators keyed by 64-bit
seeds.  Philox is counter-based, so streams for different seeds never overlap
and results are identical across platforms.  Derived seeds (per restart, per
stage) come from SeedSequence over the (master_seed, *indices) tuple, which is
numpy's documented stable seed hash.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "philox"

_MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def derive_seed(seed: int, *path: int) -> int:
    """Stable 64-bit seed for a sub-stream, e.g. derive_seed(master, restart)."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, *(int(p) & _MASK64 for p in path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
