"""Pure numpy kernels; the reference for, and fallback of, ``_kernels.pyx``.

All images are flat float64 arrays in row-major order. Map rows are
``[a00 a01 a10 a11 t0 t1]`` in 2D and ``[a00 .. a22 t0 t1 t2]`` in 3D.
Sums run sequentially (``cumsum``) so the compiled kernels, which loop in
the same order, return bit-identical floats.
"""
from __future__ import annotations

import numpy as np

from .rng import GAMMA, bounded, mix64_array

NAME = "python"


def _counters(samples: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.arange(1, samples + 1, dtype=np.uint64) * np.uint64(GAMMA)


def _seqsum(x: np.ndarray) -> np.ndarray:
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-1])
    return np.cumsum(x, axis=-1)[..., -1]


def _median_rows(values: np.ndarray) -> float:
    return float(np.sort(values)[values.shape[0] // 2])


def _clamp_intensity(w, con, bri):
    return np.minimum(np.maximum(con * w + bri, 0.0), 1.0)


def estimate_2d(m1, m2, n, rows, inten, use_intensity, seeds, samples):
    """Median over repetitions of sampled mismatch means, one per map row.

    ``seeds`` has shape (K, reps); sample ``s`` of repetition ``r`` is the
    pixel drawn from counter ``s`` of stream ``seeds[k, r]``.
    Returns ``(estimates, reads_of_m1, reads_of_m2)``.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    K, reps = seeds.shape
    size = n * n
    ctr = _counters(samples)
    est = np.empty(K)
    reads2 = 0
    for k in range(K):
        with np.errstate(over="ignore"):
            raw = mix64_array(seeds[k][:, None] + ctr[None, :])
        idx = bounded(raw, size)
        i = (idx // n + 1).astype(np.float64)
        j = (idx % n + 1).astype(np.float64)
        a = rows[k]
        u = a[0] * i + a[1] * j + a[4]
        v = a[2] * i + a[3] * j + a[5]
        inside = (u >= 1.0) & (u < n + 1.0) & (v >= 1.0) & (v < n + 1.0)
        q = (np.floor(u[inside]).astype(np.int64) - 1) * n + np.floor(v[inside]).astype(np.int64) - 1
        w = m2[q]
        if use_intensity:
            w = _clamp_intensity(w, inten[k, 0], inten[k, 1])
        vals = np.ones(idx.shape)
        vals[inside] = np.abs(m1[idx[inside]] - w)
        est[k] = _median_rows(_seqsum(vals) / samples)
        reads2 += int(np.count_nonzero(inside))
    return est, K * reps * samples, reads2


def _grid_2d(n):
    ii, jj = np.meshgrid(np.arange(1, n + 1, dtype=np.float64),
                         np.arange(1, n + 1, dtype=np.float64), indexing="ij")
    return ii.reshape(-1), jj.reshape(-1)


def exact_2d(m1, m2, n, rows, inten, use_intensity):
    """Exact normalised distance for every map row (reads every pixel of m1)."""
    ii, jj = _grid_2d(n)
    K = rows.shape[0]
    out = np.empty(K)
    for k in range(K):
        a = rows[k]
        u = a[0] * ii + a[1] * jj + a[4]
        v = a[2] * ii + a[3] * jj + a[5]
        inside = (u >= 1.0) & (u < n + 1.0) & (v >= 1.0) & (v < n + 1.0)
        q = (np.floor(u[inside]).astype(np.int64) - 1) * n + np.floor(v[inside]).astype(np.int64) - 1
        w = m2[q]
        if use_intensity:
            w = _clamp_intensity(w, inten[k, 0], inten[k, 1])
        vals = np.ones(ii.shape)
        vals[inside] = np.abs(m1[inside] - w)
        out[k] = _seqsum(vals) / (n * n)
    return out


def general_2d(p_idx, v1, q_count, q_val, n, rows):
    """Hit counts, summed pair differences and exact Out counts per map row."""
    pi = (p_idx // n + 1).astype(np.float64)
    pj = (p_idx % n + 1).astype(np.float64)
    ii, jj = _grid_2d(n)
    K = rows.shape[0]
    hit = np.empty(K, dtype=np.int64)
    bad = np.empty(K)
    out = np.empty(K, dtype=np.int64)
    for k in range(K):
        a = rows[k]
        u = a[0] * pi + a[1] * pj + a[4]
        v = a[2] * pi + a[3] * pj + a[5]
        inside = (u >= 1.0) & (u < n + 1.0) & (v >= 1.0) & (v < n + 1.0)
        q = np.zeros(p_idx.shape, dtype=np.int64)
        q[inside] = ((np.floor(u[inside]).astype(np.int64) - 1) * n
                     + np.floor(v[inside]).astype(np.int64) - 1)
        c = np.where(inside, q_count[q], 0)
        hit[k] = int(c.sum())
        bad[k] = _seqsum(np.where(c > 0, c * np.abs(v1 - q_val[q]), 0.0))
        U = a[0] * ii + a[1] * jj + a[4]
        V = a[2] * ii + a[3] * jj + a[5]
        out[k] = int(np.count_nonzero(~((U >= 1.0) & (U < n + 1.0) & (V >= 1.0) & (V < n + 1.0))))
    return hit, bad, out


def _map_3d(a, i, j, kk, n, clamp_z):
    u = a[0] * i + a[1] * j + a[2] * kk + a[9]
    v = a[3] * i + a[4] * j + a[5] * kk + a[10]
    w = a[6] * i + a[7] * j + a[8] * kk + a[11]
    inside = (u >= 1.0) & (u < n + 1.0) & (v >= 1.0) & (v < n + 1.0)
    if clamp_z:
        w = np.where(w < 1.0, 1.0, np.where(w >= n + 1.0, float(n), w))
    else:
        inside &= (w >= 1.0) & (w < n + 1.0)
    q = ((np.floor(u[inside]).astype(np.int64) - 1) * n * n
         + (np.floor(v[inside]).astype(np.int64) - 1) * n
         + np.floor(w[inside]).astype(np.int64) - 1)
    return inside, q


def estimate_3d(m1, m2, n, rows, clamp_z, seeds, samples):
    seeds = np.asarray(seeds, dtype=np.uint64)
    K, reps = seeds.shape
    size = n * n * n
    ctr = _counters(samples)
    est = np.empty(K)
    reads2 = 0
    for k in range(K):
        with np.errstate(over="ignore"):
            raw = mix64_array(seeds[k][:, None] + ctr[None, :])
        idx = bounded(raw, size)
        i = (idx // (n * n) + 1).astype(np.float64)
        j = ((idx // n) % n + 1).astype(np.float64)
        kk = (idx % n + 1).astype(np.float64)
        inside, q = _map_3d(rows[k], i, j, kk, n, clamp_z)
        vals = np.ones(idx.shape)
        vals[inside] = np.abs(m1[idx[inside]] - m2[q])
        est[k] = _median_rows(_seqsum(vals) / samples)
        reads2 += int(np.count_nonzero(inside))
    return est, K * reps * samples, reads2


def exact_3d(m1, m2, n, rows, clamp_z):
    ax = np.arange(1, n + 1, dtype=np.float64)
    ii, jj, kk = (g.reshape(-1) for g in np.meshgrid(ax, ax, ax, indexing="ij"))
    K = rows.shape[0]
    out = np.empty(K)
    for k in range(K):
        inside, q = _map_3d(rows[k], ii, jj, kk, n, clamp_z)
        vals = np.ones(ii.shape)
        vals[inside] = np.abs(m1[inside] - m2[q])
        out[k] = _seqsum(vals) / (n * n * n)
    return out
