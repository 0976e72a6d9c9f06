"""Reproducible random streams.

Every trial gets its own counter-based Philox stream. Trial seeds are derived
from the master seed with the SplitMix64 finalizer:

    z = (master_seed + 0x9E3779B97F4A7C15 * (index + 1)) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    seed_i = z ^ (z >> 31)

so any subset of trials can be replayed from (master_seed, index) alone.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(master_seed: int, index: int) -> int:
    """SplitMix64 finalizer applied to the index-th Weyl step from master_seed."""
    z = (master_seed + GOLDEN_GAMMA * (index + 1)) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    return mix64(master_seed & MASK64, trial)


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator keyed on a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return make_rng(trial_seed(master_seed, trial))


def keyed_rng(master_seed: int, *parts) -> np.random.Generator:
    """Philox stream keyed on a collision-resistant digest of (master_seed, parts)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(str(master_seed & MASK64).encode('ascii'))
    for part in parts:
        h.update(b'|')
        h.update(repr(part).encode('utf-8'))
    return np.random.Generator(np.random.Philox(key=int.from_bytes(h.digest(), 'little')))
