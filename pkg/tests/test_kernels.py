import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import distance_loop, sample_loop
from subpix import _backend, _kernels_py
from subpix.matcher import rep_seeds

BACKENDS = [_backend.get_kernels(name) for name in _backend.available()]


def random_rows(rng, K, spread=1.0, shift=8.0):
    A = np.eye(2)[None] + rng.uniform(-spread, spread, (K, 2, 2)) * 0.4
    t = rng.uniform(-shift, shift, (K, 2))
    return np.ascontiguousarray(np.concatenate([A.reshape(K, 4), t], axis=1))


def images(rng, n, gray):
    if gray:
        return rng.random(n * n), rng.random(n * n)
    return (rng.integers(0, 2, n * n).astype(np.float64),
            rng.integers(0, 2, n * n).astype(np.float64))


def test_backend_selection(monkeypatch):
    assert "python" in _backend.available()
    assert _backend.get_kernels("python") is _kernels_py
    monkeypatch.setenv("SUBPIX_BACKEND", "python")
    assert _backend.get_kernels() is _kernels_py
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.NAME)
@pytest.mark.parametrize("gray", [False, True])
def test_exact_matches_loop(k, gray):
    rng = np.random.default_rng(5)
    n = 9
    m1, m2 = images(rng, n, gray)
    rows = random_rows(rng, 6)
    inten = np.tile([1.3, -0.1], (6, 1))
    got = k.exact_2d(m1, m2, n, rows, inten, gray)
    want = [distance_loop(m1.reshape(n, n), m2.reshape(n, n), r, (1.3, -0.1) if gray else None)
            for r in rows]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.NAME)
def test_single_stream_estimate_matches_loop(k):
    rng = np.random.default_rng(6)
    n, samples = 11, 97
    m1, m2 = images(rng, n, True)
    rows = random_rows(rng, 4)
    inten = np.tile([0.7, 0.2], (4, 1))
    keys = np.array([[3], [2**63 + 5], [0], [2**64 - 1]], dtype=np.uint64)
    est, r1, r2 = k.estimate_2d(m1, m2, n, rows, inten, True, keys, samples)
    want = [sample_loop(m1.reshape(n, n), m2.reshape(n, n), r, int(key[0]), samples, (0.7, 0.2))
            for r, key in zip(rows, keys)]
    np.testing.assert_allclose(est, want, rtol=0, atol=1e-12)
    assert r1 == 4 * samples
    assert 0 <= r2 <= r1


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.NAME)
def test_median_of_repetitions(k):
    rng = np.random.default_rng(7)
    n, samples, reps = 8, 31, 5
    m1, m2 = images(rng, n, False)
    rows = random_rows(rng, 3)
    seeds = rep_seeds(42, np.arange(3), reps)
    est, r1, _ = k.estimate_2d(m1, m2, n, rows, np.tile([1.0, 0.0], (3, 1)), False, seeds, samples)
    for row, kseeds, e in zip(rows, seeds, est):
        runs = sorted(sample_loop(m1.reshape(n, n), m2.reshape(n, n), row, int(s), samples)
                      for s in kseeds)
        assert e == pytest.approx(runs[reps // 2], abs=1e-12)
    assert r1 == 3 * reps * samples


def general_loop(p_idx, v1, q_count, q_val, n, row):
    hit, bad = 0, 0.0
    for p, a in zip(p_idx, v1):
        i, j = divmod(int(p), n)
        u = row[0] * (i + 1) + row[1] * (j + 1) + row[4]
        v = row[2] * (i + 1) + row[3] * (j + 1) + row[5]
        if 1 <= u < n + 1 and 1 <= v < n + 1:
            q = (math.floor(u) - 1) * n + math.floor(v) - 1
            hit += int(q_count[q])
            bad += q_count[q] * abs(a - q_val[q])
    out = 0
    for i, j in itertools.product(range(1, n + 1), repeat=2):
        u = row[0] * i + row[1] * j + row[4]
        v = row[2] * i + row[3] * j + row[5]
        out += not (1 <= u < n + 1 and 1 <= v < n + 1)
    return hit, bad, out


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.NAME)
def test_general_matches_loop(k):
    rng = np.random.default_rng(8)
    n = 10
    p_idx = rng.integers(0, n * n, 40)
    v1 = rng.integers(0, 2, 40).astype(np.float64)
    q_count = rng.integers(0, 3, n * n).astype(np.int64)
    q_val = rng.integers(0, 2, n * n).astype(np.float64)
    rows = random_rows(rng, 5)
    hit, bad, out = k.general_2d(p_idx, v1, q_count, q_val, n, rows)
    for r, h, b, o in zip(rows, hit, bad, out):
        want = general_loop(p_idx, v1, q_count, q_val, n, r)
        assert (int(h), int(o)) == (want[0], want[2])
        assert b == pytest.approx(want[1], abs=1e-12)


def exact3_loop(v1, v2, row, clamp):
    n = v1.shape[0]
    total = 0.0
    for p in itertools.product(range(1, n + 1), repeat=3):
        w = [sum(row[3 * a + b] * p[b] for b in range(3)) + row[9 + a] for a in range(3)]
        if clamp:
            w[2] = min(max(w[2], 1.0), float(n))
        if all(1 <= x < n + 1 for x in w):
            q = tuple(math.floor(x) - 1 for x in w)
            total += abs(v1[tuple(x - 1 for x in p)] - v2[q])
        else:
            total += 1.0
    return total / n ** 3


@pytest.mark.parametrize("k", BACKENDS, ids=lambda k: k.NAME)
@pytest.mark.parametrize("clamp", [False, True])
def test_exact_3d_matches_loop(k, clamp):
    rng = np.random.default_rng(9)
    n = 5
    v1 = rng.integers(0, 2, (n, n, n)).astype(np.float64)
    v2 = rng.integers(0, 2, (n, n, n)).astype(np.float64)
    rows = np.concatenate([np.eye(3).reshape(1, 9) + rng.uniform(-0.3, 0.3, (4, 9)),
                           rng.uniform(-2, 2, (4, 3))], axis=1)
    got = k.exact_3d(v1.reshape(-1), v2.reshape(-1), n, rows, clamp)
    for r, g in zip(rows, got):
        assert g == pytest.approx(exact3_loop(v1, v2, r, clamp), abs=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 24), st.booleans())
def test_backends_bit_identical(seed, n, gray):
    rng = np.random.default_rng(seed)
    cy, py = BACKENDS
    m1, m2 = images(rng, n, gray)
    K = 7
    rows = random_rows(rng, K, shift=n / 2)
    inten = np.column_stack([rng.uniform(0.5, 2, K), rng.uniform(-1, 1, K)])
    seeds = rep_seeds(seed, np.arange(K), 3)
    a, b = cy.estimate_2d(m1, m2, n, rows, inten, gray, seeds, 50), \
        py.estimate_2d(m1, m2, n, rows, inten, gray, seeds, 50)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1:] == b[1:]
    np.testing.assert_array_equal(cy.exact_2d(m1, m2, n, rows, inten, gray),
                                  py.exact_2d(m1, m2, n, rows, inten, gray))
    p_idx = rng.integers(0, n * n, 30)
    v1 = m1[p_idx]
    q_count = rng.integers(0, 3, n * n).astype(np.int64)
    for x, y in zip(cy.general_2d(p_idx, v1, q_count, m2, n, rows),
                    py.general_2d(p_idx, v1, q_count, m2, n, rows)):
        np.testing.assert_array_equal(x, y)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.booleans())
def test_backends_bit_identical_3d(seed, n, clamp):
    rng = np.random.default_rng(seed)
    cy, py = BACKENDS
    m1 = rng.integers(0, 2, n ** 3).astype(np.float64)
    m2 = rng.integers(0, 2, n ** 3).astype(np.float64)
    rows = np.concatenate([np.eye(3).reshape(1, 9) + rng.uniform(-0.3, 0.3, (5, 9)),
                           rng.uniform(-n / 2, n / 2, (5, 3))], axis=1)
    seeds = rep_seeds(seed, np.arange(5), 3)
    a = cy.estimate_3d(m1, m2, n, rows, clamp, seeds, 40)
    b = py.estimate_3d(m1, m2, n, rows, clamp, seeds, 40)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1:] == b[1:]
    np.testing.assert_array_equal(cy.exact_3d(m1, m2, n, rows, clamp),
                                  py.exact_3d(m1, m2, n, rows, clamp))
