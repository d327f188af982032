"""Small generators of smooth test images and planted (warped) pairs."""
from __future__ import annotations

import numpy as np

from .core import BinaryImage2D, BinaryImage3D, GrayImage2D
from .transform import AffineMap2D, AffineMap3D, IntensityMap, map_pixels


def _grid(n: int):
    return np.meshgrid(np.arange(1, n + 1, dtype=np.float64),
                       np.arange(1, n + 1, dtype=np.float64), indexing="ij")


def disk(n: int, center, radius: float) -> BinaryImage2D:
    ii, jj = _grid(n)
    return BinaryImage2D((ii - center[0]) ** 2 + (jj - center[1]) ** 2 <= radius ** 2)


def half_plane(n: int, normal, offset: float) -> BinaryImage2D:
    """Pixels with ``normal . (i, j) >= offset``."""
    ii, jj = _grid(n)
    return BinaryImage2D(normal[0] * ii + normal[1] * jj >= offset)


def ball(n: int, center, radius: float) -> BinaryImage3D:
    ax = np.arange(1, n + 1, dtype=np.float64)
    ii, jj, kk = np.meshgrid(ax, ax, ax, indexing="ij")
    d2 = (ii - center[0]) ** 2 + (jj - center[1]) ** 2 + (kk - center[2]) ** 2
    return BinaryImage3D(d2 <= radius ** 2)


def ramp_disk(n: int, center, radius: float, low: float = 0.2, high: float = 0.9) -> GrayImage2D:
    """A horizontal ramp from ``low`` to ``high`` with a brighter disk on top."""
    ii, jj = _grid(n)
    v = low + (high - low) * (jj - 1) / max(n - 1, 1) * 0.5
    inside = (ii - center[0]) ** 2 + (jj - center[1]) ** 2 <= radius ** 2
    v = np.where(inside, high, v)
    return GrayImage2D(v)


def warp(image, T, L: IntensityMap | None = None, fill: float = 0.0):
    """Image ``M1`` with ``M1(p) = L(M2(T(p)))`` where ``T(p)`` is inside, else ``fill``."""
    vals = image.values
    n = image.n
    if isinstance(T, AffineMap3D):
        ax = np.arange(1, n + 1, dtype=np.float64)
        pts = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
        q = np.floor(pts @ T.A.T + T.t)
        inside = np.all((q >= 1) & (q <= n), axis=1)
        q = np.where(inside[:, None], q, 1).astype(np.int64) - 1
        out = np.where(inside, vals[q[:, 0], q[:, 1], q[:, 2]], fill).reshape(n, n, n)
        return BinaryImage3D(out.astype(np.uint8))
    ii, jj = _grid(n)
    qi, qj, inside = map_pixels(T, ii, jj, n)
    w = vals[qi - 1, qj - 1].astype(np.float64)
    if L is not None:
        w = L(w)
    out = np.where(inside, w, fill)
    if isinstance(image, BinaryImage2D) and L is None:
        return BinaryImage2D(out.astype(np.uint8))
    return GrayImage2D(out)


def random_binary(n: int, rng: np.random.Generator) -> BinaryImage2D:
    return BinaryImage2D(rng.integers(0, 2, size=(n, n), dtype=np.uint8))


def random_gray(n: int, rng: np.random.Generator) -> GrayImage2D:
    return GrayImage2D(rng.random((n, n)))
