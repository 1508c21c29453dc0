"""Seed handling.

All randomness goes through numpy's PCG64 bit generator (PCG-XSL-RR 128/64),
seeded via ``numpy.random.SeedSequence``. A seed is any integer in
``[0, 2**64)``; sub-streams are addressed by small integer tags through the
SeedSequence spawn key, so adding a new consumer never shifts an existing one.
"""

from __future__ import annotations

import numpy as np

from pcmrec.errors import InvalidArgument

MASK64 = (1 << 64) - 1

# stream tags
ROWS, COLUMNS, SUBSAMPLE, SPLIT, INIT, SHUFFLE = range(6)


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def generator(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional stream path."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(stream))
    return np.random.Generator(np.random.PCG64(ss))


def splitmix64(x: int) -> int:
    """The SplitMix64 finalizer (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def fraction_seed(master_seed: int, fraction_index: int) -> int:
    """``master_seed XOR splitmix64(fraction_index)``."""
    return check_seed(master_seed) ^ splitmix64(fraction_index)


def cell_seed(master_seed: int, fraction_index: int, repetition: int = 0) -> int:
    """Seed for one (fraction, repetition) grid cell.

    Repetition 0 is exactly :func:`fraction_seed`; later repetitions are further
    XORed with ``splitmix64(2**32 + repetition)``.
    """
    seed = fraction_seed(master_seed, fraction_index)
    if repetition:
        seed ^= splitmix64((1 << 32) + repetition)
    return seed
