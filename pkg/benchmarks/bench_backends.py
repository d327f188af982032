"""Compare the compiled and numpy kernels on the hot paths.

Usage: python3 benchmarks/bench_backends.py [--n 64] [--members 512] [--repeat 3]

Prints one JSON line per (kernel, backend) with the best wall time over the
repeats, and checks that both backends return identical results.
"""
import argparse
import json
import time

import numpy as np

from subpix._backend import available, get_kernels
from subpix.cover import CoverParams, Cover2D, Family2D
from subpix.matcher import general_sample_count, rep_seeds
from subpix.rng import derive_seed, sample_indices
from subpix.shapes import disk


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--members", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    n = args.n
    img = disk(n, (0.45 * n, 0.55 * n), 0.2 * n)
    m = np.ascontiguousarray(img.values, dtype=np.float64).reshape(-1)
    fam = Family2D((0.0, 0.0), (-0.1, 0.1), (0.9, 1.1), (-0.1, 0.1))
    cover = Cover2D(CoverParams(n, 0.1), fam)
    rows = cover.rows(0, args.members)
    K = rows.shape[0]
    inten = np.tile([1.0, 0.0], (K, 1))
    seeds = rep_seeds(7, np.arange(K), 9)
    k = general_sample_count(n, 0.15)
    p_idx = sample_indices(derive_seed(7, 0), k, n * n)
    q_idx = sample_indices(derive_seed(7, 1), k, n * n)
    q_count = np.bincount(q_idx, minlength=n * n).astype(np.int64)
    q_val = np.zeros(n * n)
    q_val[q_idx] = m[q_idx]
    v1 = np.ascontiguousarray(m[p_idx])
    cases = {
        "estimate_2d": lambda kk: kk.estimate_2d(m, m, n, rows, inten, False, seeds, 800)[0],
        "exact_2d": lambda kk: kk.exact_2d(m, m, n, rows, inten, False),
        "general_2d": lambda kk: kk.general_2d(p_idx, v1, q_count, q_val, n, rows)[1],
    }
    results = {}
    for name, fn in cases.items():
        for backend in available():
            kern = get_kernels(backend)
            secs, out = best_of(lambda: fn(kern), args.repeat)
            results.setdefault(name, []).append(out)
            print(json.dumps(dict(kernel=name, backend=backend, n=n, members=K,
                                  best_ms=round(secs * 1e3, 3))))
        outs = results[name]
        same = all(np.array_equal(outs[0], o) for o in outs[1:])
        print(json.dumps(dict(kernel=name, identical=bool(same))))


if __name__ == "__main__":
    main()
