"""Finite covers of transformation families in the l-infinity metric.

A cover is the Cartesian product of one-dimensional grids over the
parameters of a rotation-scale-rotation-translation decomposition. Members
are generated lazily from their mixed-radix index, so a cover of 10^10 maps
costs nothing until it is evaluated, and workers can take disjoint index
ranges.

Step sizes (with ``delta = delta_prime / (c + 3)``, ``N = n + 1`` and every
domain point satisfying ``|p| <= sqrt(2) N``):

* rotations: spacing at most ``delta / sqrt(2)``, so snapping moves an angle
  by at most ``delta / (2 sqrt(2))``. Since ``|R(a) - R(b)| <= |a - b|`` and
  the other factor of the product has norm at most ``c``, each rotation
  contributes at most ``c delta N / 2``.
* scales: spacing ``delta / sqrt(2)``, contributing at most ``delta N / 2``.
* translations: spacing ``sqrt(2) delta N`` per axis, so the snapped vector
  is off by at most ``delta N``.

In total a snapped member is within ``(c + 1.5) delta N`` of the map, which
is at most ``delta_prime n`` once ``n >= (c + 1.5) / 1.5``.

Translations are stored in units of ``N``. A map that keeps some pixel in
the image has ``t = q - A p`` with ``q`` in ``[1, N)^2`` and ``|A p| <=
sqrt(2) c n``, so the range ``[-sqrt(2) c, 1 + sqrt(2) c]`` suffices and the
grid cardinalities do not depend on ``n``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import CapacityError, DomainError
from .transform import (DEFAULT_C, TWO_PI, AffineMap2D, AffineMap3D, Decomposition2D,
                        Decomposition3D, IntensityMap, RestrictedMap3D, compose_decomposition,
                        compose_decomposition_3d, decompose, decompose_3d, euler_zyz, linf_rows,
                        linf_rows_3d, rotation_zyz)

DEFAULT_CAP = 10 ** 8
EXHAUSTIVE_LIMIT = 200_000
INT64_MAX = 2 ** 63 - 1
SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class CoverParams:
    n: int
    delta_prime: float
    c: float = DEFAULT_C

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if not 0.0 < self.delta_prime < SQRT2:
            raise DomainError(f"delta_prime must lie in (0, sqrt(2)), got {self.delta_prime}")
        if self.c < 1:
            raise DomainError(f"c must be >= 1, got {self.c}")

    @property
    def delta(self) -> float:
        return self.delta_prime / (self.c + 3.0)

    @property
    def radius(self) -> float:
        """Target cover radius ``delta_prime * n``."""
        return self.delta_prime * self.n


@dataclass(frozen=True)
class Grid:
    """Evenly spaced values on ``[lo, hi]``, or ``count`` points around a circle."""

    lo: float
    hi: float
    count: int
    periodic: bool = False
    angular: bool = False

    @classmethod
    def spanning(cls, lo: float, hi: float, step: float, angular: bool = False) -> "Grid":
        if hi < lo:
            raise DomainError(f"empty range [{lo}, {hi}]")
        intervals = math.ceil((hi - lo) / step - 1e-12) if hi > lo else 0
        return cls(float(lo), float(hi), intervals + 1, False, angular)

    @classmethod
    def circle(cls, step: float) -> "Grid":
        return cls(0.0, TWO_PI, max(1, math.ceil(TWO_PI / step - 1e-12)), True, True)

    @property
    def spacing(self) -> float:
        if self.periodic:
            return (self.hi - self.lo) / self.count
        return (self.hi - self.lo) / (self.count - 1) if self.count > 1 else 0.0

    def values(self) -> np.ndarray:
        if self.periodic:
            return self.lo + np.arange(self.count) * self.spacing
        if self.count == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.count)

    def refined(self) -> "Grid":
        """Same range at half the spacing; every old point stays a point."""
        if self.periodic:
            return replace(self, count=2 * self.count)
        return replace(self, count=max(1, 2 * (self.count - 1) + 1))

    def _center(self, x: float) -> float:
        if not self.angular or self.periodic:
            return x
        mid = 0.5 * (self.lo + self.hi)
        return mid + math.remainder(x - mid, TWO_PI)

    def snap(self, x: float) -> int:
        if self.count == 1:
            return 0
        x = self._center(x)
        k = round((x - self.lo) / self.spacing)
        if self.periodic:
            return int(k % self.count)
        return int(min(max(k, 0), self.count - 1))

    def neighbors(self, k: int) -> list[int]:
        if self.periodic:
            return sorted({(k + d) % self.count for d in (-1, 0, 1)})
        return [j for j in (k - 1, k, k + 1) if 0 <= j < self.count]


def _range(value, default):
    if value is None:
        return default
    lo, hi = (float(x) for x in value)
    if hi < lo:
        raise DomainError(f"range ({lo}, {hi}) is empty")
    return lo, hi


def _angle_grid(rng, step):
    return Grid.circle(step) if rng is None else Grid.spanning(*rng, step, angular=True)


def _check_scale_range(rng, c):
    if rng[0] < 1.0 / c - 1e-12 or rng[1] > c + 1e-12 or rng[0] <= 0:
        raise DomainError(f"scale range {rng} outside [1/{c}, {c}]")


@dataclass(frozen=True)
class Family2D:
    """A box of decomposition parameters; ``None`` means the whole range.

    ``translation`` is in units of ``n + 1``.
    """

    rotation1: tuple | None = None
    rotation2: tuple | None = None
    scale: tuple | None = None
    translation: tuple | None = None

    def grids(self, params: CoverParams) -> list[Grid]:
        d, c = params.delta, params.c
        ang = d / SQRT2
        scale = _range(self.scale, (1.0 / c, c))
        _check_scale_range(scale, c)
        reach = SQRT2 * c
        trans = _range(self.translation, (-reach, 1.0 + reach))
        g_s = Grid.spanning(*scale, d / SQRT2)
        g_t = Grid.spanning(*trans, SQRT2 * d)
        return [_angle_grid(self.rotation1, ang), g_s, g_s, _angle_grid(self.rotation2, ang),
                g_t, g_t]

    def sample(self, params: CoverParams, rng: np.random.Generator) -> AffineMap2D:
        """A random map of the family that keeps at least one pixel inside when possible."""
        c, n = params.c, params.n
        N = n + 1.0
        th1 = rng.uniform(*(self.rotation1 or (0.0, TWO_PI)))
        th2 = rng.uniform(*(self.rotation2 or (0.0, TWO_PI)))
        sx, sy = rng.uniform(*_range(self.scale, (1.0 / c, c)), size=2)
        A = compose_decomposition(Decomposition2D(th1, float(sx), float(sy), th2), c).A
        if self.translation is None:
            p = rng.integers(1, n + 1, size=2).astype(float)
            q = rng.uniform(1.0, N, size=2)
            t = q - A @ p
        else:
            t = rng.uniform(*self.translation, size=2) * N
        return AffineMap2D(A, t)


@dataclass(frozen=True)
class IntensityFamily:
    """Ranges of contrast and brightness; ``None`` means ``[1/c, c]`` and ``[-c, 1]``."""

    con: tuple | None = None
    bri: tuple | None = None

    def grids(self, params: CoverParams) -> list[Grid]:
        c, d = params.c, params.delta
        con = _range(self.con, (1.0 / c, c))
        _check_scale_range(con, c)
        bri = _range(self.bri, (-c, 1.0))
        return [Grid.spanning(*con, d / SQRT2), Grid.spanning(*bri, d / SQRT2)]

    def sample(self, params: CoverParams, rng: np.random.Generator) -> IntensityMap:
        c = params.c
        return IntensityMap(float(rng.uniform(*_range(self.con, (1.0 / c, c)))),
                            float(rng.uniform(*_range(self.bri, (-c, 1.0)))))


class _ProductCover:
    """Lazy Cartesian product of grids with mixed-radix member indices."""

    names: tuple = ()

    def __init__(self, params: CoverParams, grids: list[Grid], cap: int | None):
        self.params = params
        self.grids = list(grids)
        self.shape = tuple(g.count for g in self.grids)
        self.size = math.prod(self.shape)
        self._values = [g.values() for g in self.grids]
        self.cap = cap
        if cap is not None and self.size > cap:
            raise CapacityError(f"cover has {self.size} members, above the cap of {cap}")
        if self.size == 0:
            raise DomainError("empty cover")

    def __len__(self) -> int:
        return self.size

    def cardinalities(self) -> dict:
        return {name: g.count for name, g in zip(self.names, self.grids)}

    def _index_dtype(self):
        # full 3D covers outgrow int64; their indices fall back to Python ints
        return np.int64 if self.size <= INT64_MAX else object

    def digits(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=self._index_dtype())
        out = np.empty(idx.shape + (len(self.shape),), dtype=np.int64)
        for axis in range(len(self.shape) - 1, -1, -1):
            out[..., axis] = np.asarray(idx % self.shape[axis], dtype=np.int64)
            idx = idx // self.shape[axis]
        return out

    def index_of(self, digits) -> np.ndarray:
        digits = np.asarray(digits, dtype=np.int64).astype(self._index_dtype())
        idx = np.zeros(digits.shape[:-1], dtype=self._index_dtype())
        for axis, size in enumerate(self.shape):
            idx = idx * size + digits[..., axis]
        return idx

    def params_at(self, indices) -> np.ndarray:
        dg = self.digits(indices)
        return np.stack([self._values[a][dg[..., a]] for a in range(len(self.shape))], axis=-1)

    def indices(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.size if stop is None else min(stop, self.size)
        return np.arange(start, stop, dtype=np.int64)

    def chunks(self, chunk: int = 4096):
        for start in range(0, self.size, chunk):
            yield start, min(start + chunk, self.size)


def _rot2_rows(th1, sx, sy, th2, tx, ty):
    c1, s1, c2, s2 = np.cos(th1), np.sin(th1), np.cos(th2), np.sin(th2)
    return np.stack([c2 * sx * c1 - s2 * sy * s1, -c2 * sx * s1 - s2 * sy * c1,
                     s2 * sx * c1 + c2 * sy * s1, -s2 * sx * s1 + c2 * sy * c1,
                     tx, ty], axis=-1)


class Cover2D(_ProductCover):
    """Cover of planar affine maps; axes ``theta1, sx, sy, theta2, tx, ty``."""

    names = ("theta1", "sx", "sy", "theta2", "tx", "ty")

    def __init__(self, params: CoverParams, family: Family2D | None = None,
                 cap: int | None = DEFAULT_CAP, grids: list[Grid] | None = None):
        self.family = family or Family2D()
        super().__init__(params, grids or self.family.grids(params), cap)

    def rows_at(self, indices) -> np.ndarray:
        """Kernel rows ``[a00 a01 a10 a11 t0 t1]`` of the given members."""
        v = self.params_at(indices)
        N = self.params.n + 1.0
        return np.ascontiguousarray(_rot2_rows(v[..., 0], v[..., 1], v[..., 2], v[..., 3],
                                               v[..., 4] * N, v[..., 5] * N))

    def rows(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        return self.rows_at(self.indices(start, stop))

    def member(self, index: int) -> AffineMap2D:
        if not 0 <= index < self.size:
            raise DomainError(f"member index {index} out of range")
        return AffineMap2D.from_row(self.rows_at([index])[0])

    def __iter__(self):
        for start, stop in self.chunks():
            for row in self.rows(start, stop):
                yield AffineMap2D.from_row(row)

    def refined(self) -> "Cover2D":
        params = replace(self.params, delta_prime=self.params.delta_prime / 2)
        return Cover2D(params, self.family, self.cap, [g.refined() for g in self.grids])

    def _forms(self, T: AffineMap2D):
        d = decompose(T)
        N = self.params.n + 1.0
        for k in range(4):
            sx, sy = (d.sy, d.sx) if k % 2 else (d.sx, d.sy)
            yield (d.theta1 + k * math.pi / 2, sx, sy, d.theta2 - k * math.pi / 2,
                   d.tx / N, d.ty / N)

    def snap(self, T: AffineMap2D) -> int:
        """Member nearest to ``T`` parameter by parameter (canonical decomposition)."""
        form = next(self._forms(T))
        return int(self.index_of([g.snap(x) for g, x in zip(self.grids, form)]))

    def _local_candidates(self, T):
        cands = []
        for form in self._forms(T):
            base = [g.snap(x) for g, x in zip(self.grids, form)]
            neigh = [g.neighbors(b) for g, b in zip(self.grids, base)]
            cands.append(self.index_of(np.array(list(itertools.product(*neigh)))))
        return np.unique(np.concatenate(cands))

    def nearest(self, T: AffineMap2D) -> tuple[int, float]:
        """``(index, linf distance)`` of the closest member found; ties go to the lower index.

        Small covers are searched exhaustively. Otherwise the search covers
        the 3^6 grid neighbourhood of the snapped parameters of each of the
        four equivalent decompositions, which always contains the snapped
        member itself.
        """
        ref = T.as_row()
        n = self.params.n
        if self.size <= EXHAUSTIVE_LIMIT:
            best, best_d = -1, math.inf
            for start, stop in self.chunks(65536):
                d = linf_rows(self.rows(start, stop), ref, n)
                j = int(np.argmin(d))
                if d[j] < best_d:
                    best, best_d = start + j, float(d[j])
            return best, best_d
        idx = self._local_candidates(T)
        d = linf_rows(self.rows_at(idx), ref, n)
        j = int(np.argmin(d))
        return int(idx[j]), float(d[j])


def build_cover_2d(params: CoverParams, family: Family2D | None = None,
                   cap: int | None = DEFAULT_CAP) -> Cover2D:
    return Cover2D(params, family, cap)


def nearest_member(cover, T):
    """``(member, distance)`` for the closest member of ``cover`` to ``T``."""
    if len(cover) == 0:
        raise DomainError("empty cover")
    index, dist = cover.nearest(T)
    return cover.member(index), dist


# ------------------------------------------------------------ restricted 3D


class Cover3DRestricted(_ProductCover):
    """Planar cover times a grid of (con, bri) pairs.

    As a volume map a member acts as ``(planar(i, j), con k + bri n)``; as a
    grayscale pair it is ``(planar, IntensityMap(con, bri))``. Snapping con
    and bri by half a step each moves the third coordinate by at most
    ``delta (2n + 1) / (2 sqrt(2))``.
    """

    names = Cover2D.names + ("con", "bri")

    def __init__(self, params: CoverParams, family: Family2D | None = None,
                 intensity: IntensityFamily | None = None, cap: int | None = DEFAULT_CAP,
                 grids: list[Grid] | None = None):
        self.family = family or Family2D()
        self.intensity = intensity or IntensityFamily()
        if grids is None:
            grids = self.family.grids(params) + self.intensity.grids(params)
        self.planar = Cover2D(params, self.family, None, grids[:6])
        super().__init__(params, grids, cap)

    def pairs_at(self, indices):
        """Planar kernel rows (K, 6) and intensity rows ``[con, bri]`` (K, 2)."""
        idx = np.asarray(indices, dtype=np.int64)
        m = self.shape[6] * self.shape[7]
        dg = self.digits(idx)
        inten = np.stack([self._values[6][dg[..., 6]], self._values[7][dg[..., 7]]], axis=-1)
        return self.planar.rows_at(idx // m), np.ascontiguousarray(inten)

    def pairs(self, start: int = 0, stop: int | None = None):
        return self.pairs_at(self.indices(start, stop))

    def rows3d_at(self, indices) -> np.ndarray:
        planar, inten = self.pairs_at(indices)
        n = self.params.n
        K = planar.shape[0]
        rows = np.zeros((K, 12))
        rows[:, [0, 1, 3, 4]] = planar[:, :4]
        rows[:, 8] = inten[:, 0]
        rows[:, 9:11] = planar[:, 4:6]
        rows[:, 11] = inten[:, 1] * n
        return rows

    def member(self, index: int) -> tuple[AffineMap2D, IntensityMap]:
        if not 0 <= index < self.size:
            raise DomainError(f"member index {index} out of range")
        planar, inten = self.pairs_at([index])
        return AffineMap2D.from_row(planar[0]), IntensityMap(float(inten[0, 0]), float(inten[0, 1]))

    def restricted(self, index: int) -> RestrictedMap3D:
        T, L = self.member(index)
        return RestrictedMap3D(T, L.con, L.bri * self.params.n)

    def refined(self) -> "Cover3DRestricted":
        params = replace(self.params, delta_prime=self.params.delta_prime / 2)
        return Cover3DRestricted(params, self.family, self.intensity, self.cap,
                                 [g.refined() for g in self.grids])

    def nearest(self, T) -> tuple[int, float]:
        """Planar and vertical parts act on separate axes, so they are searched separately."""
        if isinstance(T, tuple):
            T = RestrictedMap3D(T[0], T[1].con, T[1].bri * self.params.n)
        n = self.params.n
        p_idx, p_d = self.planar.nearest(T.planar)
        g_con, g_bri = self.grids[6], self.grids[7]
        best = None
        con_vals, bri_vals = self._values[6], self._values[7]
        for a in g_con.neighbors(g_con.snap(T.zscale)):
            for b in g_bri.neighbors(g_bri.snap(T.zshift / n)):
                dz, dt = con_vals[a] - T.zscale, bri_vals[b] * n - T.zshift
                v = max(abs(dz + dt), abs(dz * (n + 1) + dt))
                key = (v, a, b)
                if best is None or key < best:
                    best = key
        v, a, b = best
        index = (p_idx * self.shape[6] + a) * self.shape[7] + b
        return int(index), float(math.hypot(p_d, v))


def build_cover_3d_restricted(params: CoverParams, family: Family2D | None = None,
                              intensity: IntensityFamily | None = None,
                              cap: int | None = DEFAULT_CAP) -> Cover3DRestricted:
    return Cover3DRestricted(params, family, intensity, cap)


# ------------------------------------------------------------------ full 3D


@dataclass(frozen=True)
class Family3D:
    """Box of ZYZ angles, scales and translations (units of ``n + 1``).

    ``rotation1`` and ``rotation2`` are triples of ranges for
    ``(alpha, beta, gamma)``; ``None`` means the full range.
    """

    rotation1: tuple | None = None
    rotation2: tuple | None = None
    scale: tuple | None = None
    translation: tuple | None = None

    def grids(self, params: CoverParams) -> list[Grid]:
        # each of three angle errors of delta/(6 sqrt3) moves a rotation by at
        # most delta/(2 sqrt3) in operator norm; with |p| <= sqrt3 N the two
        # rotations, scales and translations add up to (c + 1) delta N
        d, c = params.delta, params.c
        ang = d / (3.0 * SQRT3)

        def rot(ranges):
            if ranges is None:
                return [Grid.circle(ang), Grid.spanning(0.0, math.pi, ang, angular=True),
                        Grid.circle(ang)]
            return [Grid.spanning(*_range(r, None), ang, angular=True) for r in ranges]

        scale = _range(self.scale, (1.0 / c, c))
        _check_scale_range(scale, c)
        reach = SQRT3 * c
        trans = _range(self.translation, (-reach, 1.0 + reach))
        g_s = Grid.spanning(*scale, d / SQRT3)
        g_t = Grid.spanning(*trans, d / SQRT3)
        return rot(self.rotation1) + [g_s] * 3 + rot(self.rotation2) + [g_t] * 3

    def sample(self, params: CoverParams, rng: np.random.Generator) -> AffineMap3D:
        c, n = params.c, params.n
        N = n + 1.0
        full = ((0.0, TWO_PI), (0.0, math.pi), (0.0, TWO_PI))
        r1 = tuple(rng.uniform(*r) for r in (self.rotation1 or full))
        r2 = tuple(rng.uniform(*r) for r in (self.rotation2 or full))
        s = tuple(float(x) for x in rng.uniform(*_range(self.scale, (1.0 / c, c)), size=3))
        A = compose_decomposition_3d(Decomposition3D(r1, s, r2), c).A
        if self.translation is None:
            p = rng.integers(1, n + 1, size=3).astype(float)
            t = rng.uniform(1.0, N, size=3) - A @ p
        else:
            t = rng.uniform(*self.translation, size=3) * N
        return AffineMap3D(A, t)


def _cube_rotations() -> list[np.ndarray]:
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            Q = np.zeros((3, 3))
            Q[range(3), perm] = signs
            if np.linalg.det(Q) > 0:
                out.append(Q)
    return out


_CUBE_ROTATIONS = _cube_rotations()


def _zyz_batch(a, b, g):
    ca, sa, cb, sb, cg, sg = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(g), np.sin(g)
    R = np.empty(a.shape + (3, 3))
    R[..., 0, 0] = ca * cb * cg - sa * sg
    R[..., 0, 1] = -ca * cb * sg - sa * cg
    R[..., 0, 2] = ca * sb
    R[..., 1, 0] = sa * cb * cg + ca * sg
    R[..., 1, 1] = -sa * cb * sg + ca * cg
    R[..., 1, 2] = sa * sb
    R[..., 2, 0] = -sb * cg
    R[..., 2, 1] = sb * sg
    R[..., 2, 2] = cb
    return R


class Cover3DFull(_ProductCover):
    """Cover of 3D affine maps over 12 parameters: two ZYZ rotations, 3 scales, 3 shifts."""

    names = ("alpha1", "beta1", "gamma1", "s1", "s2", "s3",
             "alpha2", "beta2", "gamma2", "tx", "ty", "tz")

    def __init__(self, params: CoverParams, family: Family3D | None = None,
                 cap: int | None = DEFAULT_CAP, grids: list[Grid] | None = None):
        self.family = family or Family3D()
        super().__init__(params, grids or self.family.grids(params), cap)

    def rows_at(self, indices) -> np.ndarray:
        v = self.params_at(np.atleast_1d(indices))
        R1 = _zyz_batch(v[:, 0], v[:, 1], v[:, 2])
        R2 = _zyz_batch(v[:, 6], v[:, 7], v[:, 8])
        A = np.einsum("kab,kb,kbc->kac", R2, v[:, 3:6], R1)
        N = self.params.n + 1.0
        return np.ascontiguousarray(np.hstack([A.reshape(-1, 9), v[:, 9:12] * N]))

    def rows(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        return self.rows_at(self.indices(start, stop))

    def member(self, index: int) -> AffineMap3D:
        if not 0 <= index < self.size:
            raise DomainError(f"member index {index} out of range")
        return AffineMap3D.from_row(self.rows_at([index])[0])

    def refined(self) -> "Cover3DFull":
        params = replace(self.params, delta_prime=self.params.delta_prime / 2)
        return Cover3DFull(params, self.family, self.cap, [g.refined() for g in self.grids])

    def _forms(self, T: AffineMap3D):
        """Parameter vectors of every decomposition of ``T`` the grids can express.

        For a rotation ``Q`` of the cube, ``U S V = (U Q^T)(Q S Q^T)(Q V)`` with
        ``Q S Q^T`` diagonal, so each of the 24 such ``Q`` gives a valid split.
        """
        d = decompose_3d(T)
        U, V = rotation_zyz(*d.rot2), rotation_zyz(*d.rot1)
        s = np.asarray(d.scales)
        N = self.params.n + 1.0
        shift = [x / N for x in d.t]
        for Q in _CUBE_ROTATIONS:
            scales = np.abs(Q) @ s
            yield list(euler_zyz(Q @ V)) + list(scales) + list(euler_zyz(U @ Q.T)) + shift

    def _snap_form(self, form) -> np.ndarray:
        return np.array([g.snap(x) for g, x in zip(self.grids, form)], dtype=np.int64)

    def snap(self, T: AffineMap3D) -> int:
        """Member nearest to ``T`` parameter by parameter (canonical decomposition)."""
        return int(self.index_of(self._snap_form(next(self._forms(T)))))

    def _descend(self, cur, ref):
        n = self.params.n
        cur_d = float(linf_rows_3d(self.rows_at([self.index_of(cur)]), ref, n)[0])
        while True:
            moves = []
            for axis, g in enumerate(self.grids):
                for k in g.neighbors(int(cur[axis])):
                    if k != cur[axis]:
                        dg = cur.copy()
                        dg[axis] = k
                        moves.append(dg)
            if not moves:
                return cur, cur_d
            moves = np.array(moves)
            d = linf_rows_3d(self.rows_at(self.index_of(moves)), ref, n)
            j = int(np.argmin(d))
            if d[j] >= cur_d:
                return cur, cur_d
            cur, cur_d = moves[j], float(d[j])

    def nearest(self, T: AffineMap3D) -> tuple[int, float]:
        """Exhaustive for small covers, else greedy coordinate descent.

        The descent starts from the snapped parameters of each of the 24
        equivalent decompositions; the best end point wins, ties to the
        lowest index.
        """
        ref = T.as_row()
        n = self.params.n
        if self.size <= EXHAUSTIVE_LIMIT:
            d = linf_rows_3d(self.rows(), ref, n)
            j = int(np.argmin(d))
            return j, float(d[j])
        starts = {tuple(self._snap_form(f)) for f in self._forms(T)}
        best = None
        for start in sorted(starts):
            cur, cur_d = self._descend(np.array(start, dtype=np.int64), ref)
            key = (cur_d, int(self.index_of(cur)))
            if best is None or key < best:
                best = key
        return best[1], best[0]


def build_cover_3d_full(params: CoverParams, family: Family3D | None = None,
                        cap: int | None = DEFAULT_CAP) -> Cover3DFull:
    return Cover3DFull(params, family, cap)


# ------------------------------------------------------------- certificates


@dataclass
class Certificate:
    trials: int
    failures: int
    max_distance: float
    radius: float
    distances: np.ndarray = field(repr=False)

    @property
    def pass_rate(self) -> float:
        return 1.0 - self.failures / self.trials if self.trials else 1.0


def certify(cover, trials: int, seed: int = 0) -> Certificate:
    """Sample in-family maps and measure the distance to their nearest member."""
    rng = np.random.default_rng([seed, 0xC0FE])
    params = cover.params
    dists = np.empty(trials)
    for k in range(trials):
        if isinstance(cover, Cover3DRestricted):
            T = cover.family.sample(params, rng)
            L = cover.intensity.sample(params, rng)
            dists[k] = cover.nearest((T, L))[1]
        else:
            dists[k] = cover.nearest(cover.family.sample(params, rng))[1]
    radius = params.radius
    fails = int(np.count_nonzero(dists > radius))
    return Certificate(trials, fails, float(dists.max(initial=0.0)), radius, dists)


def snap_accumulation_bound(params: CoverParams) -> float:
    """Worst case corner displacement of a per-parameter snap, ``(c + 1.5) delta (n + 1)``."""
    return (params.c + 1.5) * params.delta * (params.n + 1)


class CandidateList:
    """An explicit list of planar maps with the lazy-cover interface."""

    def __init__(self, maps, n: int):
        self.maps = list(maps)
        if not self.maps:
            raise DomainError("empty candidate list")
        self.size = len(self.maps)
        self.n = n
        self._table = np.ascontiguousarray(np.array([T.as_row() for T in self.maps]))

    def __len__(self) -> int:
        return self.size

    def rows_at(self, indices) -> np.ndarray:
        return np.ascontiguousarray(self._table[np.asarray(indices, dtype=np.int64)])

    def rows(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        return np.ascontiguousarray(self._table[start:stop])

    def member(self, index: int) -> AffineMap2D:
        return self.maps[index]

    def nearest(self, T: AffineMap2D) -> tuple[int, float]:
        d = linf_rows(self._table, T.as_row(), self.n)
        j = int(np.argmin(d))
        return j, float(d[j])


def integer_translations(n: int, lo: int, hi: int) -> CandidateList:
    """All translations by whole pixels ``(a, b)`` with ``lo <= a, b <= hi``."""
    return CandidateList([AffineMap2D.translation(float(a), float(b))
                          for a in range(lo, hi + 1) for b in range(lo, hi + 1)], n)
