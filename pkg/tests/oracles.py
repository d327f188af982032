"""Slow, loop-based reference implementations used only by the tests.

Each one follows a definition directly, pixel by pixel, and shares no code
with the vectorised library paths it checks.
"""
import itertools
import math

from subpix.rng import GAMMA, MASK64, mix64


def _neighbours(p, n):
    for d in itertools.product((-1, 0, 1), repeat=len(p)):
        if any(d):
            q = tuple(a + b for a, b in zip(p, d))
            if all(0 <= x < n for x in q):
                yield q


def perimeter_loop(values):
    """Boundary cells (some neighbour differs) together with the outer shell."""
    n = values.shape[0]
    count = 0
    for p in itertools.product(range(n), repeat=values.ndim):
        on_shell = any(x in (0, n - 1) for x in p)
        differs = any(values[q] != values[p] for q in _neighbours(p, n))
        count += on_shell or differs
    return count


def gray_perimeter_loop(values):
    n = values.shape[0]
    total = 0.0
    for p in itertools.product(range(n), repeat=2):
        if any(x in (0, n - 1) for x in p):
            total += 1.0
        else:
            total += max(abs(values[p] - values[q]) for q in _neighbours(p, n))
    return total


def boundary_count_loop(block):
    """Cells of the block having a differing neighbour inside the block."""
    n = block.shape[0]
    return sum(any(block[q] != block[p] for q in _neighbours(p, n))
               for p in itertools.product(range(n), repeat=block.ndim))


def _target(row, p, n):
    """Image of the 1-based pixel ``p`` under a 2D map row, or None."""
    i, j = p
    u = row[0] * i + row[1] * j + row[4]
    v = row[2] * i + row[3] * j + row[5]
    if 1.0 <= u < n + 1.0 and 1.0 <= v < n + 1.0:
        return int(math.floor(u)), int(math.floor(v))
    return None


def _lum(w, L):
    if L is None:
        return w
    return min(max(L[0] * w + L[1], 0.0), 1.0)


def distance_loop(v1, v2, row, L=None):
    n = v1.shape[0]
    total = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            q = _target(row, (i, j), n)
            total += 1.0 if q is None else abs(v1[i - 1, j - 1] - _lum(v2[q[0] - 1, q[1] - 1], L))
    return total / (n * n)


def sample_loop(v1, v2, row, key, samples, L=None):
    """Single-stream estimate: sample ``s`` is counter ``s + 1`` of stream ``key``."""
    n = v1.shape[0]
    total = 0.0
    for s in range(samples):
        raw = mix64((key + (s + 1) * GAMMA) & MASK64)
        idx = ((raw >> 32) * (n * n)) >> 32
        i, j = divmod(idx, n)
        q = _target(row, (i + 1, j + 1), n)
        total += 1.0 if q is None else abs(v1[i, j] - _lum(v2[q[0] - 1, q[1] - 1], L))
    return total / samples


def linf_dense(row1, row2, n, steps=41):
    """Max displacement difference over a dense grid of the domain, corners included."""
    best = 0.0
    for a in range(steps):
        for b in range(steps):
            x = 1.0 + n * a / (steps - 1)
            y = 1.0 + n * b / (steps - 1)
            dx = (row1[0] - row2[0]) * x + (row1[1] - row2[1]) * y + row1[4] - row2[4]
            dy = (row1[2] - row2[2]) * x + (row1[3] - row2[3]) * y + row1[5] - row2[5]
            best = max(best, math.hypot(dx, dy))
    return best
