"""Affine maps, their rotation-scale-rotation decompositions, intensity maps,
and the l-infinity metric between maps over the image domain.

A pixel ``p = (i, j)`` is fed to a map as the point ``p`` itself; pixel
``(i, j)`` covers the half-open square ``[i, i+1) x [j, j+1)``, so the image
domain is ``[1, n+1)^2`` and ``floor(A p + t)`` picks the target pixel.
Functions that map pixels return ``None`` for targets outside the image.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DomainError

DEFAULT_C = 2.0
SINGULAR_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class OrientationError(DomainError):
    """Orientation-reversing (det <= 0) maps are not supported."""


def _wrap(theta: float) -> float:
    theta = math.fmod(theta, TWO_PI)
    if theta < 0:
        theta += TWO_PI
    return 0.0 if theta >= TWO_PI else theta


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _check_scaling(sv: np.ndarray, c: float | None, what: str) -> None:
    if c is None:
        return
    if c < 1:
        raise DomainError("scaling bound c must be >= 1")
    tol = 1e-9
    if sv.min() < 1.0 / c - tol or sv.max() > c + tol:
        raise DomainError(f"{what} singular values {sv} outside [1/{c}, {c}]")


@dataclass(frozen=True, eq=False)
class AffineMap2D:
    """Real affine map ``x -> A x + t`` of the plane."""

    A: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64).reshape(2, 2)
        t = np.array(self.t, dtype=np.float64).reshape(2)
        if abs(np.linalg.det(A)) <= SINGULAR_TOL:
            raise DomainError("affine matrix is singular")
        A.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "AffineMap2D":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "AffineMap2D":
        return cls(np.eye(2), [tx, ty])

    @classmethod
    def from_row(cls, row) -> "AffineMap2D":
        row = np.asarray(row, dtype=np.float64)
        return cls(row[:4].reshape(2, 2), row[4:6])

    def as_row(self) -> np.ndarray:
        """``[a00, a01, a10, a11, t0, t1]``, the layout the kernels consume."""
        return np.concatenate([self.A.reshape(-1), self.t])

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.A, compute_uv=False)

    def validate(self, c: float = DEFAULT_C) -> "AffineMap2D":
        _check_scaling(self.singular_values(), c, "affine map")
        return self

    def __call__(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=np.float64) + self.t

    def __eq__(self, other):
        return (isinstance(other, AffineMap2D) and np.array_equal(self.A, other.A)
                and np.array_equal(self.t, other.t))

    __hash__ = None

    def __repr__(self):
        return f"AffineMap2D(A={self.A.tolist()}, t={self.t.tolist()})"


def apply_image_affine(T: AffineMap2D, p, n: int):
    """``floor(A p + t)`` as a pixel, or ``None`` when it leaves {1..n}^2."""
    i, j = int(p[0]), int(p[1])
    if not (1 <= i <= n and 1 <= j <= n):
        raise DomainError(f"pixel {tuple(p)!r} outside {{1..{n}}}^2")
    q = np.floor(T(np.array([i, j], dtype=np.float64)))
    if np.all((q >= 1) & (q <= n)):
        return int(q[0]), int(q[1])
    return None


def map_pixels(T: AffineMap2D, i: np.ndarray, j: np.ndarray, n: int):
    """Vectorised image-affine map; returns target coordinates and an inside mask."""
    a = T.A
    i = np.asarray(i, dtype=np.float64)
    j = np.asarray(j, dtype=np.float64)
    u = a[0, 0] * i + a[0, 1] * j + T.t[0]
    v = a[1, 0] * i + a[1, 1] * j + T.t[1]
    inside = (u >= 1) & (u < n + 1) & (v >= 1) & (v < n + 1)
    qi = np.where(inside, np.floor(u), 1).astype(np.int64)
    qj = np.where(inside, np.floor(v), 1).astype(np.int64)
    return qi, qj, inside


@dataclass(frozen=True)
class Decomposition2D:
    """``A = R(theta2) diag(sx, sy) R(theta1)``, followed by translation."""

    theta1: float
    sx: float
    sy: float
    theta2: float
    tx: float = 0.0
    ty: float = 0.0


def compose_decomposition(d: Decomposition2D, c: float | None = DEFAULT_C) -> AffineMap2D:
    _check_scaling(np.array([d.sx, d.sy]), c, "decomposition")
    if d.sx <= 0 or d.sy <= 0:
        raise DomainError("scales must be positive")
    A = rotation_2d(d.theta2) @ np.diag([d.sx, d.sy]) @ rotation_2d(d.theta1)
    return AffineMap2D(A, [d.tx, d.ty])


def decompose(T: AffineMap2D) -> Decomposition2D:
    """Canonical SVD split: descending scales, det(U) = det(V) = +1, theta1 in [0, pi)."""
    A = T.A
    if np.linalg.det(A) <= 0:
        raise OrientationError("orientation-reversing maps are not supported")
    U, s, Vt = np.linalg.svd(A)
    if np.linalg.det(U) < 0:
        U[:, 1] *= -1
        Vt[1, :] *= -1
    if s[0] - s[1] <= 1e-12 * s[0]:
        # isotropic: A = s R(phi), the split between the rotations is free
        theta1 = 0.0
        theta2 = math.atan2(A[1, 0], A[0, 0])
    else:
        theta2 = math.atan2(U[1, 0], U[0, 0])
        theta1 = math.atan2(Vt[1, 0], Vt[0, 0])
    theta1 = _wrap(theta1)
    if theta1 >= math.pi:
        # R(pi) = -I commutes with the scaling
        theta1 -= math.pi
        theta2 += math.pi
    return Decomposition2D(_wrap(theta1), float(s[0]), float(s[1]), _wrap(theta2),
                           float(T.t[0]), float(T.t[1]))


def corners_2d(n: int) -> np.ndarray:
    N = n + 1.0
    return np.array([[1.0, 1.0], [1.0, N], [N, 1.0], [N, N]])


def linf_rows(rows: np.ndarray, ref: np.ndarray, n: int) -> np.ndarray:
    """l-inf distances between each ``[a00 a01 a10 a11 t0 t1]`` row and ``ref``.

    ``p -> ||D p + e||`` is convex, so its maximum over the square domain is
    attained at one of the four corners.
    """
    d = np.atleast_2d(rows) - np.asarray(ref)
    best = np.zeros(d.shape[0])
    for x, y in corners_2d(n):
        u = d[:, 0] * x + d[:, 1] * y + d[:, 4]
        v = d[:, 2] * x + d[:, 3] * y + d[:, 5]
        best = np.maximum(best, np.hypot(u, v))
    return best


def linf_distance(T1: AffineMap2D, T2: AffineMap2D, n: int) -> float:
    if n < 1:
        raise DomainError("n must be >= 1")
    return float(linf_rows(T1.as_row()[None, :], T2.as_row(), n)[0])


# ---------------------------------------------------------------- 3D maps

def _rz(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(b: float) -> np.ndarray:
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_zyz(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return _rz(alpha) @ _ry(beta) @ _rz(gamma)


def euler_zyz(R: np.ndarray) -> tuple[float, float, float]:
    """Angles with ``rotation_zyz(*angles) == R``; beta in [0, pi]."""
    beta = math.atan2(math.hypot(R[0, 2], R[1, 2]), R[2, 2])
    if math.sin(beta) > 1e-12:
        alpha = math.atan2(R[1, 2], R[0, 2])
    else:
        alpha = 0.0
    # solve gamma from the residual so the triple always recomposes exactly
    M = _ry(beta).T @ _rz(alpha).T @ R
    gamma = math.atan2(M[1, 0], M[0, 0])
    return _wrap(alpha), beta, _wrap(gamma)


@dataclass(frozen=True, eq=False)
class AffineMap3D:
    A: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64).reshape(3, 3)
        t = np.array(self.t, dtype=np.float64).reshape(3)
        if abs(np.linalg.det(A)) <= SINGULAR_TOL:
            raise DomainError("affine matrix is singular")
        A.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "AffineMap3D":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def translation(cls, tx, ty, tz) -> "AffineMap3D":
        return cls(np.eye(3), [tx, ty, tz])

    @classmethod
    def from_row(cls, row) -> "AffineMap3D":
        row = np.asarray(row, dtype=np.float64)
        return cls(row[:9].reshape(3, 3), row[9:12])

    def as_row(self) -> np.ndarray:
        return np.concatenate([self.A.reshape(-1), self.t])

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.A, compute_uv=False)

    def validate(self, c: float = DEFAULT_C) -> "AffineMap3D":
        _check_scaling(self.singular_values(), c, "affine map")
        return self

    def __call__(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=np.float64) + self.t

    def __eq__(self, other):
        return (isinstance(other, AffineMap3D) and np.array_equal(self.A, other.A)
                and np.array_equal(self.t, other.t))

    __hash__ = None

    def __repr__(self):
        return f"AffineMap3D(A={self.A.tolist()}, t={self.t.tolist()})"


def apply_image_affine_3d(T: AffineMap3D, v, n: int):
    v = np.array([int(x) for x in v], dtype=np.float64)
    if v.shape != (3,) or np.any((v < 1) | (v > n)):
        raise DomainError(f"voxel {tuple(v)!r} outside {{1..{n}}}^3")
    q = np.floor(T(v))
    if np.all((q >= 1) & (q <= n)):
        return tuple(int(x) for x in q)
    return None


@dataclass(frozen=True)
class Decomposition3D:
    """``A = R2 diag(scales) R1`` with each rotation given as ZYZ Euler angles."""

    rot1: tuple[float, float, float]
    scales: tuple[float, float, float]
    rot2: tuple[float, float, float]
    t: tuple[float, float, float] = (0.0, 0.0, 0.0)


def compose_decomposition_3d(d: Decomposition3D, c: float | None = DEFAULT_C) -> AffineMap3D:
    s = np.asarray(d.scales, dtype=np.float64)
    _check_scaling(s, c, "decomposition")
    if np.any(s <= 0):
        raise DomainError("scales must be positive")
    A = rotation_zyz(*d.rot2) @ np.diag(s) @ rotation_zyz(*d.rot1)
    return AffineMap3D(A, d.t)


def decompose_3d(T: AffineMap3D) -> Decomposition3D:
    if np.linalg.det(T.A) <= 0:
        raise OrientationError("orientation-reversing maps are not supported")
    U, s, Vt = np.linalg.svd(T.A)
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        Vt[2, :] *= -1
    return Decomposition3D(euler_zyz(Vt), tuple(float(x) for x in s), euler_zyz(U),
                           tuple(float(x) for x in T.t))


def corners_3d(n: int) -> np.ndarray:
    N = n + 1.0
    return np.array([[x, y, z] for x in (1.0, N) for y in (1.0, N) for z in (1.0, N)])


def linf_rows_3d(rows: np.ndarray, ref: np.ndarray, n: int) -> np.ndarray:
    d = np.atleast_2d(rows) - np.asarray(ref)
    D = d[:, :9].reshape(-1, 3, 3)
    e = d[:, 9:12]
    disp = np.einsum("kab,cb->kca", D, corners_3d(n)) + e[:, None, :]
    return np.sqrt((disp ** 2).sum(axis=2)).max(axis=1)


def linf_distance_3d(T1: AffineMap3D, T2: AffineMap3D, n: int) -> float:
    return float(linf_rows_3d(T1.as_row()[None, :], T2.as_row(), n)[0])


# ------------------------------------------------- intensity and restricted maps

@dataclass(frozen=True)
class IntensityMap:
    """``v -> clamp(con * v + bri, 0, 1)``."""

    con: float = 1.0
    bri: float = 0.0

    def validate(self, c: float = DEFAULT_C) -> "IntensityMap":
        tol = 1e-12
        if not (1.0 / c - tol <= self.con <= c + tol):
            raise DomainError(f"contrast {self.con} outside [1/{c}, {c}]")
        if not (-c - tol <= self.bri <= 1.0 + tol):
            raise DomainError(f"brightness {self.bri} outside [-{c}, 1]")
        return self

    def __call__(self, v):
        return np.clip(self.con * np.asarray(v, dtype=np.float64) + self.bri, 0.0, 1.0)


def apply_intensity(L: IntensityMap, v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"pixel value {v} outside [0, 1]")
    return float(min(max(L.con * v + L.bri, 0.0), 1.0))


def _breakpoints(L: IntensityMap) -> list[float]:
    if L.con == 0:
        return []
    return [-L.bri / L.con, (1.0 - L.bri) / L.con]


def linf_intensity(L1: IntensityMap, L2: IntensityMap) -> float:
    """Max |L1(v) - L2(v)| over [0, 1]; both maps are piecewise linear."""
    pts = [0.0, 1.0] + [b for b in _breakpoints(L1) + _breakpoints(L2) if 0.0 < b < 1.0]
    v = np.array(pts)
    return float(np.max(np.abs(L1(v) - L2(v))))


@dataclass(frozen=True)
class RestrictedMap3D:
    """Planar affine map on (i, j) plus scale-and-shift on the third coordinate."""

    planar: AffineMap2D
    zscale: float = 1.0
    zshift: float = 0.0

    def as_affine(self) -> AffineMap3D:
        A = np.zeros((3, 3))
        A[:2, :2] = self.planar.A
        A[2, 2] = self.zscale
        return AffineMap3D(A, [self.planar.t[0], self.planar.t[1], self.zshift])


def truncate_z(w, n: int):
    """floor(w) pushed back into {1..n}."""
    return np.clip(np.floor(w), 1, n).astype(np.int64)


def apply_restricted_3d(T: RestrictedMap3D, v, n: int):
    i, j, k = (int(x) for x in v)
    if not (1 <= k <= n):
        raise DomainError(f"voxel {tuple(v)!r} outside {{1..{n}}}^3")
    q = apply_image_affine(T.planar, (i, j), n)
    if q is None:
        return None
    return q[0], q[1], int(truncate_z(T.zscale * k + T.zshift, n))


def linf_restricted(T1: RestrictedMap3D, T2: RestrictedMap3D, n: int) -> float:
    """l-inf over [1, n+1)^3; planar and vertical parts act on independent axes."""
    planar = linf_distance(T1.planar, T2.planar, n)
    dz, dt = T1.zscale - T2.zscale, T1.zshift - T2.zshift
    vertical = max(abs(dz + dt), abs(dz * (n + 1) + dt))
    return math.hypot(planar, vertical)


# ---------------------------------------------------------- descriptor files

def to_descriptor(T, L: IntensityMap | None = None) -> dict:
    if isinstance(T, RestrictedMap3D):
        record = to_descriptor(T.as_affine())
        record["restricted"] = True
        return record
    record = {"A": [float(x) for x in T.A.reshape(-1)], "t": [float(x) for x in T.t]}
    if L is not None:
        record["con"] = float(L.con)
        record["bri"] = float(L.bri)
    return record


def from_descriptor(record: dict):
    """Inverse of :func:`to_descriptor`; returns ``(map, intensity_or_None)``."""
    try:
        A = [float(x) for x in record["A"]]
        t = [float(x) for x in record["t"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed transform descriptor: {exc}") from exc
    if len(A) == 4 and len(t) == 2:
        T = AffineMap2D(A, t)
    elif len(A) == 9 and len(t) == 3:
        T = AffineMap3D(A, t)
        if record.get("restricted"):
            M = T.A
            T = RestrictedMap3D(AffineMap2D(M[:2, :2], T.t[:2]), float(M[2, 2]), float(T.t[2]))
    else:
        raise DomainError("descriptor needs A with 4 or 9 entries and t with 2 or 3")
    L = None
    if "con" in record or "bri" in record:
        L = IntensityMap(float(record.get("con", 1.0)), float(record.get("bri", 0.0)))
    return T, L


def write_descriptor(path, T, L: IntensityMap | None = None) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(to_descriptor(T, L), indent=2) + "\n")


def read_descriptor(path):
    try:
        record = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed transform descriptor {path}: {exc}") from exc
    return from_descriptor(record)
