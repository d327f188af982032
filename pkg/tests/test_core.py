import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import gray_perimeter_loop, perimeter_loop
from subpix.core import (BinaryImage2D, BinaryImage3D, DomainError, GrayImage2D, MeteredImage,
                         gradient, is_smooth, perimeter, perimeter_binary_2d,
                         perimeter_binary_3d, perimeter_gray, subsection_boundary_count)


def checkerboard(n, dims=2):
    return np.indices((n,) * dims).sum(axis=0) % 2


# ----------------------------------------------------------------- containers

def test_rejects_non_binary_and_non_square():
    with pytest.raises(DomainError):
        BinaryImage2D(np.full((4, 4), 2))
    with pytest.raises(DomainError):
        BinaryImage2D(np.zeros((4, 5)))
    with pytest.raises(DomainError):
        GrayImage2D(np.full((4, 4), 1.5))
    with pytest.raises(DomainError):
        BinaryImage3D(np.zeros((4, 4, 3)))


def test_one_based_indexing():
    v = np.zeros((3, 3))
    v[0, 2] = 1
    assert BinaryImage2D(v)[(1, 3)] == 1
    with pytest.raises(DomainError):
        BinaryImage2D(v)[(0, 1)]


# ------------------------------------------------------------------ perimeter

def test_perimeter_constant_4x4():
    assert perimeter_binary_2d(BinaryImage2D(np.zeros((4, 4)))) == 12


def test_perimeter_single_pixel_5x5():
    v = np.zeros((5, 5))
    v[2, 2] = 1
    assert perimeter_binary_2d(BinaryImage2D(v)) == 25


@pytest.mark.parametrize("n", [2, 5, 8])
def test_perimeter_checkerboard(n):
    assert perimeter_binary_2d(BinaryImage2D(checkerboard(n))) == n * n
    assert perimeter_binary_3d(BinaryImage3D(checkerboard(n, 3))) == n ** 3


def test_perimeter_3d_constant():
    assert perimeter_binary_3d(BinaryImage3D(np.ones((3, 3, 3)))) == 26


def test_perimeter_3d_single_voxel():
    # 56 shell voxels plus the 8 of the 27-voxel neighbourhood not on the shell
    v = np.zeros((4, 4, 4))
    v[1, 1, 1] = 1
    assert perimeter_loop(v) == 64
    assert perimeter_binary_3d(BinaryImage3D(v)) == 64


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(2, 9), st.just(1)).map(lambda t: (t[0], t[0])),
              elements=st.integers(0, 1)))
def test_perimeter_matches_loop_and_bounds(v):
    n = v.shape[0]
    p = perimeter_binary_2d(BinaryImage2D(v))
    assert p == perimeter_loop(v)
    assert 4 * n - 4 <= p <= n * n


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_perimeter_3d_matches_loop_and_bounds(n, seed):
    v = np.random.default_rng(seed).integers(0, 2, (n, n, n))
    p = perimeter_binary_3d(BinaryImage3D(v))
    assert p == perimeter_loop(v)
    assert 6 * n * n - 12 * n + 8 <= p <= n ** 3


def test_subsection_count_ignores_shell():
    assert subsection_boundary_count(np.zeros((4, 4))) == 0
    block = np.zeros((4, 4))
    block[0, 0] = 1
    assert subsection_boundary_count(block) == 4


# ------------------------------------------------------------------ gradients

def test_gradient_examples():
    assert gradient(GrayImage2D(np.full((5, 5), 0.3)), (3, 3)) == 0.0
    v = np.zeros((5, 5))
    v[0, 0] = 1
    assert gradient(GrayImage2D(v), (2, 2)) == 1.0
    n = 8
    ramp = np.tile(np.arange(1, n + 1) / n, (n, 1))
    assert gradient(GrayImage2D(ramp), (4, 4)) == pytest.approx(1 / n)
    with pytest.raises(DomainError):
        gradient(GrayImage2D(ramp), (0, 4))
    with pytest.raises(DomainError):
        gradient(GrayImage2D(ramp), (4, 9))


def test_gray_perimeter_examples():
    n = 8
    assert perimeter_gray(GrayImage2D(np.full((n, n), 0.4))) == 4 * n - 4
    assert perimeter_gray(GrayImage2D(checkerboard(n).astype(float))) == n * n
    ramp = np.tile(np.arange(1, n + 1) / n, (n, 1))
    assert perimeter_gray(GrayImage2D(ramp)) == pytest.approx(32.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_gray_perimeter_matches_loop(n, seed):
    v = np.random.default_rng(seed).random((n, n))
    assert perimeter_gray(GrayImage2D(v)) == pytest.approx(gray_perimeter_loop(v), abs=1e-12)


def test_gray_perimeter_of_binary_values_equals_binary_perimeter():
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = rng.integers(0, 2, (7, 7))
        assert perimeter_gray(GrayImage2D(v.astype(float))) == perimeter_binary_2d(BinaryImage2D(v))


# ------------------------------------------------------------------ smoothness

def test_is_smooth_examples():
    n = 16
    assert is_smooth(BinaryImage2D(np.zeros((n, n))), 4)
    assert not is_smooth(BinaryImage2D(checkerboard(n)), 4)
    half = np.zeros((n, n))
    half[:, n // 2:] = 1
    assert perimeter(BinaryImage2D(half)) == 6 * n - 8
    assert is_smooth(BinaryImage2D(half), 6)
    with pytest.raises(DomainError):
        is_smooth(BinaryImage2D(half), 0)


# ---------------------------------------------------------------- metering

def test_metered_counts_each_read():
    m = MeteredImage(BinaryImage2D(checkerboard(6)))
    assert m.n == 6 and m.ndim == 2 and m.reads == 0
    m.read((1, 1))
    m.read((2, 3))
    assert m.reads == 2
    out = m.read_flat([0, 5, 7, 35])
    assert out.tolist() == [0, 1, 0, 0]
    assert m.reads == 6


@given(st.lists(st.integers(0, 15), max_size=50), st.integers(0, 30))
def test_metered_counter_is_exact(flat, extra):
    m = MeteredImage(BinaryImage2D(np.zeros((4, 4))))
    m.read_flat(flat)
    m.charge(extra)
    assert m.reads == len(flat) + extra


def test_metered_rejects_negative_charge():
    with pytest.raises(DomainError):
        MeteredImage(BinaryImage2D(np.zeros((4, 4)))).charge(-1)
