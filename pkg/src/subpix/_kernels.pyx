# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contracts and arithmetic order as ``_kernels_py``."""
import numpy as np

from libc.math cimport floor, fabs
from libc.stdint cimport uint64_t, int64_t

NAME = "cython"

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline int64_t bounded(uint64_t raw, uint64_t size) noexcept nogil:
    return <int64_t>(((raw >> 32) * size) >> 32)


cdef inline double clamp01(double w) noexcept nogil:
    if w < 0.0:
        w = 0.0
    if w > 1.0:
        w = 1.0
    return w


cdef double median_of(double* buf, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t a, b
    cdef double x
    for a in range(1, m):
        x = buf[a]
        b = a - 1
        while b >= 0 and buf[b] > x:
            buf[b + 1] = buf[b]
            b -= 1
        buf[b + 1] = x
    return buf[m // 2]


def estimate_2d(const double[::1] m1, const double[::1] m2, Py_ssize_t n,
                const double[:, ::1] rows, const double[:, ::1] inten, bint use_intensity,
                seeds, Py_ssize_t samples):
    cdef const uint64_t[:, ::1] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t K = sd.shape[0], reps = sd.shape[1]
    cdef uint64_t size = <uint64_t>(n * n)
    cdef double[::1] est = np.empty(K)
    cdef double[::1] buf = np.empty(max(reps, 1))
    cdef Py_ssize_t k, r, s
    cdef int64_t idx, qi, qj
    cdef int64_t reads2 = 0
    cdef uint64_t key
    cdef double i, j, u, v, w, acc, top = n + 1.0
    cdef double a0, a1, a2, a3, t0, t1, con, bri
    with nogil:
        for k in range(K):
            a0 = rows[k, 0]; a1 = rows[k, 1]; a2 = rows[k, 2]; a3 = rows[k, 3]
            t0 = rows[k, 4]; t1 = rows[k, 5]
            con = inten[k, 0]; bri = inten[k, 1]
            for r in range(reps):
                key = sd[k, r]
                acc = 0.0
                for s in range(samples):
                    idx = bounded(mix64(key + <uint64_t>(s + 1) * GAMMA), size)
                    i = <double>(idx // n + 1)
                    j = <double>(idx % n + 1)
                    u = a0 * i + a1 * j + t0
                    v = a2 * i + a3 * j + t1
                    if u >= 1.0 and u < top and v >= 1.0 and v < top:
                        qi = <int64_t>floor(u)
                        qj = <int64_t>floor(v)
                        w = m2[(qi - 1) * n + qj - 1]
                        if use_intensity:
                            w = clamp01(con * w + bri)
                        acc = acc + fabs(m1[idx] - w)
                        reads2 += 1
                    else:
                        acc = acc + 1.0
                buf[r] = acc / samples
            est[k] = median_of(&buf[0], reps)
    return np.asarray(est), K * reps * samples, reads2


def exact_2d(const double[::1] m1, const double[::1] m2, Py_ssize_t n,
             const double[:, ::1] rows, const double[:, ::1] inten, bint use_intensity):
    cdef Py_ssize_t K = rows.shape[0]
    cdef double[::1] out = np.empty(K)
    cdef Py_ssize_t k, pi, pj
    cdef int64_t qi, qj
    cdef double u, v, w, acc, top = n + 1.0
    cdef double a0, a1, a2, a3, t0, t1, con, bri
    with nogil:
        for k in range(K):
            a0 = rows[k, 0]; a1 = rows[k, 1]; a2 = rows[k, 2]; a3 = rows[k, 3]
            t0 = rows[k, 4]; t1 = rows[k, 5]
            con = inten[k, 0]; bri = inten[k, 1]
            acc = 0.0
            for pi in range(n):
                for pj in range(n):
                    u = a0 * <double>(pi + 1) + a1 * <double>(pj + 1) + t0
                    v = a2 * <double>(pi + 1) + a3 * <double>(pj + 1) + t1
                    if u >= 1.0 and u < top and v >= 1.0 and v < top:
                        qi = <int64_t>floor(u)
                        qj = <int64_t>floor(v)
                        w = m2[(qi - 1) * n + qj - 1]
                        if use_intensity:
                            w = clamp01(con * w + bri)
                        acc = acc + fabs(m1[pi * n + pj] - w)
                    else:
                        acc = acc + 1.0
            out[k] = acc / <double>(n * n)
    return np.asarray(out)


def general_2d(const int64_t[::1] p_idx, const double[::1] v1, const int64_t[::1] q_count,
               const double[::1] q_val, Py_ssize_t n, const double[:, ::1] rows):
    cdef Py_ssize_t K = rows.shape[0], S = p_idx.shape[0]
    cdef int64_t[::1] hit = np.empty(K, dtype=np.int64)
    cdef double[::1] bad = np.empty(K)
    cdef int64_t[::1] out = np.empty(K, dtype=np.int64)
    cdef Py_ssize_t k, s, pi, pj
    cdef int64_t q, c, h, o
    cdef double i, j, u, v, acc, top = n + 1.0
    cdef double a0, a1, a2, a3, t0, t1
    with nogil:
        for k in range(K):
            a0 = rows[k, 0]; a1 = rows[k, 1]; a2 = rows[k, 2]; a3 = rows[k, 3]
            t0 = rows[k, 4]; t1 = rows[k, 5]
            h = 0
            acc = 0.0
            for s in range(S):
                i = <double>(p_idx[s] // n + 1)
                j = <double>(p_idx[s] % n + 1)
                u = a0 * i + a1 * j + t0
                v = a2 * i + a3 * j + t1
                if u >= 1.0 and u < top and v >= 1.0 and v < top:
                    q = (<int64_t>floor(u) - 1) * n + <int64_t>floor(v) - 1
                    c = q_count[q]
                    if c > 0:
                        h += c
                        acc = acc + <double>c * fabs(v1[s] - q_val[q])
            o = 0
            for pi in range(n):
                for pj in range(n):
                    u = a0 * <double>(pi + 1) + a1 * <double>(pj + 1) + t0
                    v = a2 * <double>(pi + 1) + a3 * <double>(pj + 1) + t1
                    if not (u >= 1.0 and u < top and v >= 1.0 and v < top):
                        o += 1
            hit[k] = h
            bad[k] = acc
            out[k] = o
    return np.asarray(hit), np.asarray(bad), np.asarray(out)


cdef inline int64_t map_3d(const double[:, ::1] rows, Py_ssize_t k, double i, double j,
                           double kk, Py_ssize_t n, bint clamp_z) noexcept nogil:
    """Flat target index, or -1 when the voxel leaves the volume."""
    cdef double top = n + 1.0
    cdef double u = rows[k, 0] * i + rows[k, 1] * j + rows[k, 2] * kk + rows[k, 9]
    cdef double v = rows[k, 3] * i + rows[k, 4] * j + rows[k, 5] * kk + rows[k, 10]
    cdef double w = rows[k, 6] * i + rows[k, 7] * j + rows[k, 8] * kk + rows[k, 11]
    if not (u >= 1.0 and u < top and v >= 1.0 and v < top):
        return -1
    if clamp_z:
        if w < 1.0:
            w = 1.0
        elif w >= top:
            w = <double>n
    elif not (w >= 1.0 and w < top):
        return -1
    return ((<int64_t>floor(u) - 1) * n * n + (<int64_t>floor(v) - 1) * n
            + <int64_t>floor(w) - 1)


def estimate_3d(const double[::1] m1, const double[::1] m2, Py_ssize_t n,
                const double[:, ::1] rows, bint clamp_z, seeds, Py_ssize_t samples):
    cdef const uint64_t[:, ::1] sd = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t K = sd.shape[0], reps = sd.shape[1]
    cdef uint64_t size = <uint64_t>(n * n * n)
    cdef double[::1] est = np.empty(K)
    cdef double[::1] buf = np.empty(max(reps, 1))
    cdef Py_ssize_t k, r, s
    cdef int64_t idx, q
    cdef int64_t reads2 = 0
    cdef uint64_t key
    cdef double acc
    with nogil:
        for k in range(K):
            for r in range(reps):
                key = sd[k, r]
                acc = 0.0
                for s in range(samples):
                    idx = bounded(mix64(key + <uint64_t>(s + 1) * GAMMA), size)
                    q = map_3d(rows, k, <double>(idx // (n * n) + 1),
                               <double>((idx // n) % n + 1), <double>(idx % n + 1), n, clamp_z)
                    if q >= 0:
                        acc = acc + fabs(m1[idx] - m2[q])
                        reads2 += 1
                    else:
                        acc = acc + 1.0
                buf[r] = acc / samples
            est[k] = median_of(&buf[0], reps)
    return np.asarray(est), K * reps * samples, reads2


def exact_3d(const double[::1] m1, const double[::1] m2, Py_ssize_t n,
             const double[:, ::1] rows, bint clamp_z):
    cdef Py_ssize_t K = rows.shape[0]
    cdef double[::1] out = np.empty(K)
    cdef Py_ssize_t k, a, b, c
    cdef int64_t q
    cdef double acc
    with nogil:
        for k in range(K):
            acc = 0.0
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        q = map_3d(rows, k, <double>(a + 1), <double>(b + 1), <double>(c + 1),
                                   n, clamp_z)
                        if q >= 0:
                            acc = acc + fabs(m1[(a * n + b) * n + c] - m2[q])
                        else:
                            acc = acc + 1.0
            out[k] = acc / <double>(n * n * n)
    return np.asarray(out)
