"""Image containers, boundary/perimeter measures and the metered read facade.

Pixels and voxels are addressed with 1-based coordinates ``(i, j)`` /
``(i, j, k)``; the underlying numpy arrays are 0-based, so pixel ``(i, j)``
lives at ``values[i - 1, j - 1]``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import ndimage


class SubpixError(Exception):
    """Base class for all library errors."""


class DomainError(SubpixError, ValueError):
    """An argument lies outside the domain of an operation."""


class CapacityError(SubpixError):
    """A cover or exhaustive search would exceed its configured size cap."""


class ImageFormatError(SubpixError, ValueError):
    """A file could not be parsed as the expected image format."""


def _square(values, ndim: int, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != ndim or len(set(arr.shape)) != 1:
        raise DomainError(f"{name} needs a {'x'.join(['n'] * ndim)} grid, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DomainError(f"{name} must have side length >= 1")
    return arr


def _binary(values, ndim: int, name: str) -> np.ndarray:
    arr = _square(values, ndim, name)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError(f"{name} values must be 0 or 1")
    out = arr.astype(np.uint8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BinaryImage2D:
    """An n x n image of bits."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _binary(self.values, 2, "BinaryImage2D"))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, p) -> int:
        i, j = _check_pixel(p, self.n)
        return int(self.values[i - 1, j - 1])

    def __eq__(self, other):
        return isinstance(other, BinaryImage2D) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GrayImage2D:
    """An n x n image with values in [0, 1], stored as float64."""

    values: np.ndarray

    def __post_init__(self):
        arr = _square(self.values, 2, "GrayImage2D").astype(np.float64)
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise DomainError("GrayImage2D values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, p) -> float:
        i, j = _check_pixel(p, self.n)
        return float(self.values[i - 1, j - 1])

    def __eq__(self, other):
        return isinstance(other, GrayImage2D) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryImage3D:
    """An n x n x n volume of bits indexed by voxel (i, j, k)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _binary(self.values, 3, "BinaryImage3D"))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, v) -> int:
        if len(v) != 3:
            raise DomainError(f"voxel must have 3 coordinates, got {v!r}")
        i, j, k = (int(x) for x in v)
        n = self.n
        if not (1 <= i <= n and 1 <= j <= n and 1 <= k <= n):
            raise DomainError(f"voxel {v!r} outside {{1..{n}}}^3")
        return int(self.values[i - 1, j - 1, k - 1])

    def __eq__(self, other):
        return isinstance(other, BinaryImage3D) and np.array_equal(self.values, other.values)

    __hash__ = None


Image = Union[BinaryImage2D, GrayImage2D, BinaryImage3D]


def _check_pixel(p, n: int) -> tuple[int, int]:
    if len(p) != 2:
        raise DomainError(f"pixel must have 2 coordinates, got {p!r}")
    i, j = int(p[0]), int(p[1])
    if not (1 <= i <= n and 1 <= j <= n):
        raise DomainError(f"pixel {tuple(p)!r} outside {{1..{n}}}^2")
    return i, j


class MeteredImage:
    """Wraps an image and counts every pixel/voxel value read.

    Geometry (``n``, ``ndim``) is free. The compiled kernels read the raw
    array directly and report their read counts through :meth:`charge`.
    """

    def __init__(self, inner: Image):
        if isinstance(inner, MeteredImage):
            inner = inner.inner
        self.inner = inner
        self._reads = 0
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def ndim(self) -> int:
        return self.inner.values.ndim

    @property
    def reads(self) -> int:
        return self._reads

    def charge(self, count: int) -> None:
        if count < 0:
            raise DomainError("read count cannot be negative")
        with self._lock:
            self._reads += int(count)

    def read(self, p):
        value = self.inner[p]
        self.charge(1)
        return value

    def read_flat(self, index) -> np.ndarray:
        """Read values at 0-based flat indices (row-major)."""
        index = np.asarray(index, dtype=np.int64)
        out = self.inner.values.reshape(-1)[index]
        self.charge(index.size)
        return out


def as_metered(image) -> MeteredImage:
    return image if isinstance(image, MeteredImage) else MeteredImage(image)


def unwrap(image) -> Image:
    return image.inner if isinstance(image, MeteredImage) else image


def boundary_mask(values: np.ndarray) -> np.ndarray:
    """Cells with a differently valued neighbour (8- or 26-adjacency)."""
    values = np.asarray(values)
    # 'nearest' replicates edge cells, which never introduces a new value
    hi = ndimage.maximum_filter(values, size=3, mode="nearest")
    lo = ndimage.minimum_filter(values, size=3, mode="nearest")
    return hi != lo


def _outer_shell(shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[axis] = 0
        mask[tuple(idx)] = True
        idx[axis] = -1
        mask[tuple(idx)] = True
    return mask


def perimeter_binary_2d(image: BinaryImage2D) -> int:
    """Size of (boundary pixels) union (the 4n-4 outermost pixels)."""
    values = unwrap(image).values
    return int(np.count_nonzero(boundary_mask(values) | _outer_shell(values.shape)))


def perimeter_binary_3d(image: BinaryImage3D) -> int:
    values = unwrap(image).values
    if values.shape[0] < 2:
        raise DomainError("perimeter_binary_3d needs n >= 2")
    return int(np.count_nonzero(boundary_mask(values) | _outer_shell(values.shape)))


def gradient_map(values: np.ndarray) -> np.ndarray:
    """Per-pixel max |M(p) - M(q)| over adjacent q."""
    values = np.asarray(values, dtype=np.float64)
    hi = ndimage.maximum_filter(values, size=3, mode="nearest")
    lo = ndimage.minimum_filter(values, size=3, mode="nearest")
    return np.maximum(hi - values, values - lo)


def gradient(image: GrayImage2D, p) -> float:
    image = unwrap(image)
    n = image.n
    i, j = _check_pixel(p, n)
    v = image.values
    window = v[max(i - 2, 0):min(i + 1, n), max(j - 2, 0):min(j + 1, n)]
    return float(np.max(np.abs(window - v[i - 1, j - 1])))


def perimeter_gray(image: GrayImage2D) -> float:
    """Sum of gradients, with each outermost pixel counted as exactly 1."""
    values = unwrap(image).values
    if values.shape[0] < 2:
        raise DomainError("perimeter_gray needs n >= 2")
    grad = gradient_map(values)
    grad[_outer_shell(values.shape)] = 1.0
    return float(grad.sum())


def perimeter(image) -> float:
    image = unwrap(image)
    if isinstance(image, BinaryImage2D):
        return perimeter_binary_2d(image)
    if isinstance(image, GrayImage2D):
        return perimeter_gray(image)
    if isinstance(image, BinaryImage3D):
        return perimeter_binary_3d(image)
    raise DomainError(f"no perimeter for {type(image).__name__}")


def is_smooth(image, C: float) -> bool:
    """True iff the perimeter is at most C * n."""
    if C <= 0:
        raise DomainError("smoothness constant C must be positive")
    image = unwrap(image)
    return perimeter(image) <= C * image.n


def subsection_boundary_count(block: np.ndarray) -> int:
    """Boundary cells of a square/cubic block, using adjacency inside the block only."""
    return int(np.count_nonzero(boundary_mask(np.asarray(block))))
