"""Level-set reduction of grayscale images to binary volumes, and grayscale matching.

Voxel ``(i, j, k)`` of the volume is set iff ``M(i, j) >= k / n``, so column
``(i, j)`` is a stack of ``floor(n M(i, j))`` ones. An intensity map acts on
the third axis: the column top at height ``n v`` moves to ``n L(v)``, i.e.
``z -> con z + bri n`` truncated to ``[0, n]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .core import BinaryImage3D, DomainError, GrayImage2D, unwrap
from .cover import DEFAULT_CAP, CoverParams, Cover3DRestricted, Family2D, IntensityFamily
from .matcher import (CM, C2, _cover_search, _flat, _same_n, exact_distance_under,
                      reps_for, samples_for)
from .transform import DEFAULT_C, AffineMap2D, IntensityMap, RestrictedMap3D, map_pixels


@dataclass
class GrayMatchResult:
    transform: AffineMap2D
    intensity: IntensityMap
    estimated_distance: float
    queries_used: int
    params: dict
    index: int = -1
    reads_m1: int = 0
    reads_m2: int = 0
    estimates: np.ndarray | None = field(default=None, repr=False)


def reduce_to_3d(M: GrayImage2D) -> BinaryImage3D:
    v = unwrap(M).values
    n = v.shape[0]
    levels = np.arange(1, n + 1, dtype=np.float64) / n
    return BinaryImage3D(v[:, :, None] >= levels[None, None, :])


def distance_TL(M1: GrayImage2D, M2: GrayImage2D, T: AffineMap2D, L: IntensityMap) -> float:
    return exact_distance_under(M1, M2, T, L)


def lift_transform(T: AffineMap2D, L: IntensityMap, n: int) -> RestrictedMap3D:
    """``(T, L)`` as a volume map: planar ``T``, third axis ``z -> con z + bri n``."""
    return RestrictedMap3D(T, float(L.con), float(L.bri) * n)


def column_heights(V: BinaryImage3D) -> np.ndarray:
    return unwrap(V).values.sum(axis=2, dtype=np.int64)


def volume_distance(V1: BinaryImage3D, M2: GrayImage2D, R: RestrictedMap3D) -> float:
    """Column mismatch distance between ``V1`` and the lifted ``M2`` moved by ``R``.

    A column mapped outside counts 1; otherwise it contributes
    ``|h1 - H| / n`` where ``h1`` is the height of the ``V1`` column and
    ``H = floor(clamp(zscale n v2 + zshift, 0, n))`` is the height of the
    ``M2`` column after the third-axis map. Normalised by ``n^2``.
    """
    h1 = column_heights(V1)
    v2 = unwrap(M2).values
    n = h1.shape[0]
    ii, jj = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    qi, qj, inside = map_pixels(R.planar, ii, jj, n)
    top = np.clip(R.zscale * n * v2[qi - 1, qj - 1] + R.zshift, 0.0, n)
    H = np.floor(top)
    per_col = np.where(inside, np.abs(h1 - H) / n, 1.0)
    return float(per_col.sum() / (n * n))


def reduction_consistency(M1: GrayImage2D, M2: GrayImage2D, T: AffineMap2D, L: IntensityMap):
    """``(gray, vol, gap)``: the grayscale distance, its volume counterpart and their gap."""
    n = _same_n(M1, M2)
    gray = distance_TL(M1, M2, T, L)
    vol = volume_distance(reduce_to_3d(M1), M2, lift_transform(T, L, n))
    return gray, vol, abs(gray - vol)


def match_grayscale(M1, M2, delta_prime: float, epsilon: float, c: float = DEFAULT_C,
                    rng_seed: int = 0, family: Family2D | None = None,
                    intensity: IntensityFamily | None = None,
                    cover: Cover3DRestricted | None = None, workers: int = 1,
                    cap: int | None = DEFAULT_CAP, c2: float = C2, cm: float = CM,
                    kernels=None) -> GrayMatchResult:
    """Pair ``(T, L)`` of the restricted cover with the lowest median estimate.

    Sampled pixels contribute ``|M1(p) - L(M2(T(p)))|``, or 1 when ``T(p)``
    leaves the image.
    """
    k = kernels or _backend.kernels
    n = _same_n(M1, M2)
    if not isinstance(unwrap(M1), GrayImage2D) or not isinstance(unwrap(M2), GrayImage2D):
        raise DomainError("match_grayscale needs grayscale images")
    if cover is None:
        cover = Cover3DRestricted(CoverParams(n, delta_prime, c), family, intensity, cap)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    samples = samples_for(epsilon, c2)
    reps = reps_for(cover.size, cm)
    m1, m2 = _flat(M1), _flat(M2)

    def kern(pair, seeds, s):
        planar, inten = pair
        return k.estimate_2d(m1, m2, n, planar, inten, True, seeds, s)

    v, i, r1, r2, q, _ = _cover_search(M1, M2, cover, cover.pairs, kern, rng_seed, reps,
                                       samples, workers)
    T, L = cover.member(i)
    return GrayMatchResult(T, L, v, q,
                           dict(delta_prime=delta_prime, epsilon=epsilon, c=c, seed=rng_seed,
                                cover_size=cover.size, reps=reps, samples=samples),
                           i, r1, r2)
