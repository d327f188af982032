"""Hard instance pairs: independent random images (D1) and planted shifts (D2).

Both use ``k x k`` blocks of fair coin flips. In D2 the second image is the
first shifted down by ``s_h`` rows and right by ``s_v`` columns, with the
uncovered strips filled by fresh random blocks, so the translation
``(s_h, s_v)`` matches all but at most ``1 - (7/8)^2 = 15/64`` of the area.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .core import BinaryImage2D, DomainError
from .cover import integer_translations
from .matcher import exact_distance_under, match_smooth
from .transform import AffineMap2D

# sub-stream ids for numpy generators seeded with [seed, id]
_M1, _M2, _SHIFT, _FILL = 1, 2, 3, 4


@dataclass(frozen=True)
class AdversarialParams:
    n: int
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise DomainError("n and k must be positive")
        if self.n % self.k:
            raise DomainError(f"block size {self.k} must divide n = {self.n}")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")


def _blocks(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    coins = rng.integers(0, 2, size=(n // k, n // k), dtype=np.uint8)
    return np.kron(coins, np.ones((k, k), dtype=np.uint8))


def gen_d1(params: AdversarialParams):
    n, k, s = params.n, params.k, params.seed
    return (BinaryImage2D(_blocks(n, k, np.random.default_rng([s, _M1]))),
            BinaryImage2D(_blocks(n, k, np.random.default_rng([s, _M2]))))


def max_shift(n: int, k: int) -> int:
    """Largest multiple of ``k`` not above ``floor(n / 8)``."""
    return (n // 8) // k * k


def gen_d2(params: AdversarialParams, shift: tuple[int, int] | None = None):
    """``(M1, M2, (s_h, s_v))``; ``shift`` overrides the random planted shift."""
    n, k, s = params.n, params.k, params.seed
    m1 = _blocks(n, k, np.random.default_rng([s, _M1]))
    if shift is None:
        top = max_shift(n, k) // k
        s_h, s_v = (int(x) * k for x in np.random.default_rng([s, _SHIFT]).integers(0, top + 1, 2))
    else:
        s_h, s_v = (int(x) for x in shift)
        if s_h < 0 or s_v < 0 or s_h >= n or s_v >= n:
            raise DomainError(f"shift {shift} outside [0, n)")
    m2 = _blocks(n, k, np.random.default_rng([s, _FILL]))
    m2[s_h:, s_v:] = m1[:n - s_h, :n - s_v]
    return BinaryImage2D(m1), BinaryImage2D(m2), (s_h, s_v)


def planted_translation(shift) -> AffineMap2D:
    """The map with ``M1(p) = M2(T(p))`` wherever ``T(p)`` is inside."""
    return AffineMap2D.translation(float(shift[0]), float(shift[1]))


def translation_distances(M1: BinaryImage2D, M2: BinaryImage2D) -> np.ndarray:
    """Exact distance under every integer translation ``d`` in ``(-n, n)^2``.

    Entry ``[a + n - 1, b + n - 1]`` is the distance under ``p -> p + (a, b)``.
    Matches are counted by correlating the ones and the zeros of both images,
    so the distance is ``1 - (ones matched + zeros matched) / n^2``.
    """
    a = M1.values.astype(np.float64)
    b = M2.values.astype(np.float64)
    n = a.shape[0]
    # correlation c[d] = sum_p a[p] b[p + d], via convolution with the flipped a
    ones = fftconvolve(b, a[::-1, ::-1], mode="full")
    zeros = fftconvolve(1.0 - b, (1.0 - a)[::-1, ::-1], mode="full")
    matched = np.rint(ones + zeros)
    return 1.0 - matched / (n * n)


def min_translation_distance(M1: BinaryImage2D, M2: BinaryImage2D):
    """``(distance, (a, b))`` minimised over integer translations; ties to the first."""
    d = translation_distances(M1, M2)
    n = M1.n
    flat = int(np.argmin(d))
    a, b = divmod(flat, d.shape[1])
    return float(d.flat[flat]), (a - n + 1, b - n + 1)


def separation_experiment(n_values, k: int, delta_prime: float, epsilon: float, seeds,
                          workers: int = 1) -> list[dict]:
    """One record per (family, n, seed) with the smooth matcher's result and exact checks.

    The matcher searches whole-pixel translations by ``0 .. floor(n/8)``, a
    cover of the shift range at any radius, which contains every planted
    shift.
    """
    rows = []
    for n in n_values:
        cover = integer_translations(n, 0, n // 8)
        for seed in seeds:
            params = AdversarialParams(n, k, seed)
            d1 = gen_d1(params)
            d2a, d2b, shift = gen_d2(params)
            for name, (A, B) in (("d1", d1), ("d2", (d2a, d2b))):
                res = match_smooth(A, B, delta_prime, epsilon, rng_seed=seed, cover=cover,
                                   workers=workers)
                record = dict(family=name, n=n, k=k, seed=seed,
                              estimated=res.estimated_distance,
                              exact_at_result=exact_distance_under(A, B, res.transform),
                              min_translation=min_translation_distance(A, B)[0],
                              queries=res.queries_used, cover_size=cover.size)
                if name == "d2":
                    record["shift"] = list(shift)
                    record["planted"] = exact_distance_under(A, B, planted_translation(shift))
                rows.append(record)
    return rows
