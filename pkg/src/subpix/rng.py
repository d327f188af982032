"""Counter-based random streams (SplitMix64 finaliser).

Every sample is a pure function of ``(key, counter)`` so candidates can be
evaluated in any order, on any number of workers, with identical results.
The compiled kernels implement the same arithmetic in C.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, key: int) -> int:
    """Child seed for ``key`` (a candidate index, a repetition number, ...)."""
    return mix64(mix64(seed) + (key + 1) * GAMMA)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seeds(seed: int, keys) -> np.ndarray:
    """Vectorised :func:`derive_seed` over an array of keys."""
    keys = np.asarray(keys, dtype=np.uint64)
    base = np.uint64(mix64(seed))
    with np.errstate(over="ignore"):
        return mix64_array(base + (keys + np.uint64(1)) * np.uint64(GAMMA))


def stream(key: int, count: int, start: int = 0) -> np.ndarray:
    """Raw 64-bit outputs ``start .. start+count-1`` of the stream ``key``."""
    ctr = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(np.uint64(key & MASK64) + ctr * np.uint64(GAMMA))


def bounded(raw: np.ndarray, size: int) -> np.ndarray:
    """Map raw outputs to integers in [0, size) by multiply-shift (size < 2**32)."""
    if not 0 < size < (1 << 32):
        raise ValueError("size must be in [1, 2**32)")
    return (((raw >> np.uint64(32)) * np.uint64(size)) >> np.uint64(32)).astype(np.int64)


def sample_indices(key: int, count: int, size: int) -> np.ndarray:
    return bounded(stream(key, count), size)
