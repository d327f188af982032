"""Exact and sampled distances between images, and the matchers built on them.

Sampling uses counter-based streams: member ``k`` of a cover gets the key
``derive_seed(seed, k)`` and its repetition ``r`` the stream
``derive_seed(key, r)``, so every estimate is a pure function of
``(seed, k, r)`` and results do not depend on chunking or worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .core import (BinaryImage2D, BinaryImage3D, CapacityError, DomainError, GrayImage2D,
                   as_metered, unwrap)
from .cover import (DEFAULT_CAP, CoverParams, Cover2D, Cover3DFull, Family2D, Family3D)
from .rng import GAMMA, derive_seed, derive_seeds, mix64_array, sample_indices
from .transform import (DEFAULT_C, AffineMap2D, AffineMap3D, IntensityMap, RestrictedMap3D,
                        map_pixels)

C1 = 4.0
C2 = 2.0
CM = 3.0
DEFAULT_WORK_CAP = 10 ** 10
CHUNK = 2048


def work_cap() -> int:
    """Default pixel-evaluation cap, overridable with ``SUBPIX_WORK_CAP``."""
    env = os.environ.get("SUBPIX_WORK_CAP")
    return int(float(env)) if env else DEFAULT_WORK_CAP


@dataclass(frozen=True)
class SampleBudget:
    epsilon: float
    reps: int = 1
    samples: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if self.samples == 0:
            object.__setattr__(self, "samples", samples_for(self.epsilon))
        if self.samples < 1:
            raise DomainError("samples must be >= 1")


def samples_for(epsilon: float, c2: float = C2) -> int:
    return max(1, math.ceil(c2 / epsilon ** 2))


def reps_for(size: int, cm: float = CM) -> int:
    """``max(1, ceil(cm ln size))``, made odd so the median is a sampled value."""
    m = max(1, math.ceil(cm * math.log(size))) if size > 1 else 1
    return m if m % 2 else m + 1


@dataclass
class MatchResult:
    transform: object
    estimated_distance: float
    queries_used: int
    params: dict
    index: int = -1
    reads_m1: int = 0
    reads_m2: int = 0
    intensity: IntensityMap | None = None
    estimates: np.ndarray | None = field(default=None, repr=False)


# ------------------------------------------------------------------ helpers


def _flat(image) -> np.ndarray:
    return np.ascontiguousarray(unwrap(image).values, dtype=np.float64).reshape(-1)


def _same_n(M1, M2):
    a, b = unwrap(M1), unwrap(M2)
    if a.values.shape != b.values.shape:
        raise DomainError(f"image shapes differ: {a.values.shape} vs {b.values.shape}")
    return a.n


def _row2(T) -> np.ndarray:
    return np.ascontiguousarray(T.as_row()[None, :])


def _inten(L, K=1) -> np.ndarray:
    L = L or IntensityMap()
    return np.ascontiguousarray(np.tile([L.con, L.bri], (K, 1)), dtype=np.float64)


def rep_seeds(seed: int, indices, m: int) -> np.ndarray:
    """(K, m) matrix of ``derive_seed(derive_seed(seed, k), r)``."""
    keys = derive_seeds(seed, indices)
    ctr = (np.arange(m, dtype=np.uint64) + np.uint64(1)) * np.uint64(GAMMA)
    with np.errstate(over="ignore"):
        return mix64_array(mix64_array(keys)[:, None] + ctr[None, :])


def _inside_count_2d(T, n) -> int:
    ii, jj = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    return int(np.count_nonzero(map_pixels(T, ii, jj, n)[2]))


def _inside_count_3d(T: AffineMap3D, n: int, clamp_z: bool) -> int:
    ax = np.arange(1, n + 1, dtype=np.float64)
    pts = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    w = pts @ T.A.T + T.t
    axes = 2 if clamp_z else 3
    return int(np.count_nonzero(np.all((w[:, :axes] >= 1) & (w[:, :axes] < n + 1), axis=1)))


def _run_chunks(size: int, evaluate, workers: int, chunk: int = CHUNK):
    """Apply ``evaluate(start, stop)`` over index chunks; results in index order."""
    ranges = [(s, min(s + chunk, size)) for s in range(0, size, chunk)]
    if workers <= 1 or len(ranges) == 1:
        return [evaluate(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: evaluate(*r), ranges))


def _reduce(parts):
    """Lowest value over chunks, ties to the lowest index; sums of read counts."""
    best_v, best_i, r1, r2 = math.inf, -1, 0, 0
    for v, i, a, b in parts:
        if v < best_v:
            best_v, best_i = v, i
        r1 += a
        r2 += b
    return best_v, best_i, r1, r2


# ------------------------------------------------------------ exact oracle


def exact_distance_under(M1, M2, T, L: IntensityMap | None = None, kernels=None) -> float:
    """Exact normalised distance under ``T`` (and intensity map ``L`` if given).

    Pixels mapped outside count 1, the others ``|M1(p) - L(M2(T(p)))|``.
    Metered inputs are charged one read per pixel of ``M1`` and one per
    pixel of ``M2`` hit.
    """
    k = kernels or _backend.kernels
    n = _same_n(M1, M2)
    m1, m2 = _flat(M1), _flat(M2)
    if isinstance(T, AffineMap2D):
        if unwrap(M1).values.ndim != 2:
            raise DomainError("a planar map needs 2D images")
        d = float(k.exact_2d(m1, m2, n, _row2(T), _inten(L), L is not None)[0])
        inside = _inside_count_2d(T, n) if hasattr(M2, "charge") else 0
    elif isinstance(T, (AffineMap3D, RestrictedMap3D)):
        if unwrap(M1).values.ndim != 3:
            raise DomainError("a 3D map needs 3D images")
        clamp = isinstance(T, RestrictedMap3D)
        A = T.as_affine() if clamp else T
        d = float(k.exact_3d(m1, m2, n, _row2(A), clamp)[0])
        inside = _inside_count_3d(A, n, clamp) if hasattr(M2, "charge") else 0
    else:
        raise DomainError(f"unsupported transform {type(T).__name__}")
    if hasattr(M1, "charge"):
        M1.charge(m1.size)
    if hasattr(M2, "charge"):
        M2.charge(inside)
    return d


# ------------------------------------------------------- sampled estimates


def _estimate(M1, M2, T, L, seeds, samples, kernels):
    k = kernels or _backend.kernels
    n = _same_n(M1, M2)
    m1, m2 = _flat(M1), _flat(M2)
    if isinstance(T, AffineMap2D):
        est, r1, r2 = k.estimate_2d(m1, m2, n, _row2(T), _inten(L), L is not None, seeds, samples)
    elif isinstance(T, (AffineMap3D, RestrictedMap3D)):
        clamp = isinstance(T, RestrictedMap3D)
        A = T.as_affine() if clamp else T
        est, r1, r2 = k.estimate_3d(m1, m2, n, _row2(A), clamp, seeds, samples)
    else:
        raise DomainError(f"unsupported transform {type(T).__name__}")
    for image, reads in ((M1, r1), (M2, r2)):
        if hasattr(image, "charge"):
            image.charge(reads)
    return float(est[0])


def estimate_distance_single(M1, M2, T, budget: SampleBudget, rng_seed: int,
                             L: IntensityMap | None = None, kernels=None) -> float:
    """Mean mismatch over ``budget.samples`` pixels drawn from the stream ``rng_seed``."""
    seeds = np.array([[rng_seed & ((1 << 64) - 1)]], dtype=np.uint64)
    return _estimate(M1, M2, T, L, seeds, budget.samples, kernels)


def estimate_distance_median(M1, M2, T, budget: SampleBudget, rng_seed: int,
                             L: IntensityMap | None = None, kernels=None) -> float:
    """Median of ``budget.reps`` single estimates seeded ``derive_seed(rng_seed, r)``."""
    if budget.reps % 2 == 0:
        raise DomainError("the number of repetitions must be odd")
    seeds = derive_seeds(rng_seed, np.arange(budget.reps))[None, :]
    return _estimate(M1, M2, T, L, seeds, budget.samples, kernels)


# ----------------------------------------------------------- smooth matcher


def _cover_search(M1, M2, cover, rows_fn, kern_fn, seed, reps, samples, workers,
                  keep_all=False):
    M1, M2 = as_metered(M1), as_metered(M2)
    before = M1.reads + M2.reads
    everything = np.empty(cover.size) if keep_all else None

    def evaluate(start, stop):
        idx = np.arange(start, stop, dtype=np.int64)
        est, r1, r2 = kern_fn(rows_fn(start, stop), rep_seeds(seed, idx, reps), samples)
        M1.charge(r1)
        M2.charge(r2)
        if everything is not None:
            everything[start:stop] = est
        j = int(np.argmin(est))
        return float(est[j]), start + j, r1, r2

    best_v, best_i, r1, r2 = _reduce(_run_chunks(cover.size, evaluate, workers))
    return best_v, best_i, r1, r2, M1.reads + M2.reads - before, everything


def match_smooth(M1, M2, delta_prime: float, epsilon: float, c: float = DEFAULT_C,
                 rng_seed: int = 0, family: Family2D | None = None, cover=None,
                 workers: int = 1, cap: int | None = DEFAULT_CAP, c2: float = C2,
                 cm: float = CM, kernels=None, keep_all: bool = False) -> MatchResult:
    """Cover member with the lowest median-of-estimates distance.

    ``cover`` may be any lazy cover or a ``CandidateList``; by default the
    planar cover of ``family`` at radius ``delta_prime n`` is built.
    """
    k = kernels or _backend.kernels
    n = _same_n(M1, M2)
    if not isinstance(unwrap(M1), (BinaryImage2D, GrayImage2D)):
        raise DomainError("match_smooth needs 2D images")
    budget = SampleBudget(epsilon, 1, samples_for(epsilon, c2))
    if cover is None:
        cover = Cover2D(CoverParams(n, delta_prime, c), family, cap)
    reps = reps_for(cover.size, cm)
    m1, m2 = _flat(M1), _flat(M2)
    ones = _inten(None, 1)

    def kern(rows, seeds, samples):
        return k.estimate_2d(m1, m2, n, rows, np.broadcast_to(ones, (rows.shape[0], 2)).copy(),
                             False, seeds, samples)

    v, i, r1, r2, q, everything = _cover_search(M1, M2, cover, cover.rows, kern, rng_seed, reps,
                                                budget.samples, workers, keep_all)
    return MatchResult(cover.member(i), v, q,
                       dict(delta_prime=delta_prime, epsilon=epsilon, c=c, seed=rng_seed,
                            cover_size=cover.size, reps=reps, samples=budget.samples),
                       i, r1, r2, None, everything)


def match_smooth_3d(M1, M2, delta_prime: float, epsilon: float, c: float = DEFAULT_C,
                    rng_seed: int = 0, family: Family3D | None = None,
                    cover: Cover3DFull | None = None, workers: int = 1,
                    cap: int | None = DEFAULT_CAP, c2: float = C2, cm: float = CM,
                    kernels=None) -> MatchResult:
    """The smooth matcher over a 3D cover, sampling voxels instead of pixels."""
    k = kernels or _backend.kernels
    n = _same_n(M1, M2)
    if not isinstance(unwrap(M1), BinaryImage3D):
        raise DomainError("match_smooth_3d needs 3D images")
    budget = SampleBudget(epsilon, 1, samples_for(epsilon, c2))
    if cover is None:
        cover = Cover3DFull(CoverParams(n, delta_prime, c), family, cap)
    reps = reps_for(cover.size, cm)
    m1, m2 = _flat(M1), _flat(M2)

    def kern(rows, seeds, samples):
        return k.estimate_3d(m1, m2, n, rows, False, seeds, samples)

    v, i, r1, r2, q, _ = _cover_search(M1, M2, cover, cover.rows, kern, rng_seed, reps,
                                       budget.samples, workers)
    return MatchResult(cover.member(i), v, q,
                       dict(delta_prime=delta_prime, epsilon=epsilon, c=c, seed=rng_seed,
                            cover_size=cover.size, reps=reps, samples=budget.samples),
                       i, r1, r2)


# ---------------------------------------------------------- general matcher


def all_out(n: int) -> AffineMap2D:
    """A translation that sends every pixel outside the image."""
    return AffineMap2D.translation(n + 1.0, n + 1.0)


def general_sample_count(n: int, epsilon: float, c1: float = C1) -> int:
    return max(1, math.ceil(c1 * n * math.log(n + 1) / epsilon ** 2))


def match_general(M1, M2, epsilon: float, candidates, rng_seed: int = 0,
                  strict_paper: bool = False, workers: int = 1, c1: float = C1,
                  kernels=None) -> MatchResult:
    """Pair-sampling matcher over an explicit candidate list (or a ``Cover2D``).

    Samples ``k`` pixels of each image with replacement. A candidate's Hit
    count is the number of sampled pairs ``(p, q)`` with ``T(p) = q`` and
    Bad is the mean value difference over those pairs; Out is counted
    geometrically. Candidates with ``Hit < epsilon k^2 / n^2`` are discarded
    and the rest ranked by ``(Out + (n^2 - Out) Bad) / n^2``. With
    ``strict_paper`` the discard threshold is the bare ``epsilon`` and the
    ranking ``(n^2 - Out) Bad``.
    """
    kern = kernels or _backend.kernels
    n = _same_n(M1, M2)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if isinstance(candidates, Cover2D):
        size, rows_fn, member = candidates.size, candidates.rows, candidates.member
    else:
        cands = list(candidates)
        if not cands:
            raise DomainError("no candidate transformations")
        table = np.ascontiguousarray(np.array([T.as_row() for T in cands]))
        size = len(cands)
        rows_fn = lambda a, b: table[a:b]  # noqa: E731
        member = cands.__getitem__
    M1, M2 = as_metered(M1), as_metered(M2)
    before = M1.reads + M2.reads
    k = general_sample_count(n, epsilon, c1)
    nn = n * n
    p_idx = sample_indices(derive_seed(rng_seed, 0), k, nn)
    q_idx = sample_indices(derive_seed(rng_seed, 1), k, nn)
    v1 = np.ascontiguousarray(M1.read_flat(p_idx), dtype=np.float64)
    v2 = np.asarray(M2.read_flat(q_idx), dtype=np.float64)
    q_count = np.bincount(q_idx, minlength=nn).astype(np.int64)
    q_val = np.zeros(nn)
    q_val[q_idx] = v2
    threshold = epsilon if strict_paper else epsilon * k * k / nn
    estimates = np.empty(size)

    def evaluate(start, stop):
        hit, bad, out = kern.general_2d(p_idx, v1, q_count, q_val, n, rows_fn(start, stop))
        keep = hit >= threshold
        badfrac = np.where(hit > 0, bad / np.maximum(hit, 1), 1.0)
        if strict_paper:
            score = (nn - out) * badfrac
        else:
            score = (out + (nn - out) * badfrac) / nn
        score = np.where(keep, score, np.inf)
        estimates[start:stop] = np.where(keep, (out + (nn - out) * badfrac) / nn, np.nan)
        j = int(np.argmin(score))
        return float(score[j]), start + j, 0, 0

    best, i, _, _ = _reduce(_run_chunks(size, evaluate, workers))
    params = dict(epsilon=epsilon, seed=rng_seed, samples=k, strict_paper=strict_paper,
                  candidates=size)
    queries = M1.reads + M2.reads - before
    if not math.isfinite(best):
        return MatchResult(all_out(n), 1.0, queries, params, -1, k, k, None, estimates)
    return MatchResult(member(i), float(estimates[i]), queries, params, i, k, k, None, estimates)


# ------------------------------------------------------------ exact search


def exact_distance(M1, M2, delta_prime: float, c: float = DEFAULT_C,
                   family: Family2D | None = None, cover: Cover2D | None = None,
                   cap: int | None = None, workers: int = 1, kernels=None):
    """Exhaustive minimum of the exact distance over a cover; ``(T, distance, index)``."""
    kern = kernels or _backend.kernels
    n = _same_n(M1, M2)
    if cover is None:
        cover = Cover2D(CoverParams(n, delta_prime, c), family, None)
    cap = work_cap() if cap is None else cap
    if cover.size * n * n > cap:
        raise CapacityError(f"{cover.size} members x {n * n} pixels exceeds the work cap {cap}")
    m1, m2 = _flat(M1), _flat(M2)
    ones = _inten(None, 1)

    def evaluate(start, stop):
        rows = cover.rows(start, stop)
        d = kern.exact_2d(m1, m2, n, rows, np.repeat(ones, rows.shape[0], axis=0), False)
        j = int(np.argmin(d))
        return float(d[j]), start + j, 0, 0

    best, i, _, _ = _reduce(_run_chunks(cover.size, evaluate, workers))
    return cover.member(i), best, i
