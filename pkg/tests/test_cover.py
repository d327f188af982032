import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subpix.core import CapacityError, DomainError
from subpix.cover import (CandidateList, Cover2D, Cover3DFull, Cover3DRestricted, CoverParams,
                          Family2D, Family3D, Grid, IntensityFamily, build_cover_2d,
                          build_cover_3d_full, build_cover_3d_restricted, certify,
                          integer_translations, nearest_member, snap_accumulation_bound)
from subpix.transform import (AffineMap2D, AffineMap3D, IntensityMap, RestrictedMap3D,
                              linf_distance, linf_distance_3d, linf_restricted)

SMALL = Family2D(rotation1=(0.0, 0.3), rotation2=(-0.2, 0.2), scale=(0.9, 1.2),
                 translation=(-0.1, 0.1))


def grid_count(lo, hi, step):
    return math.ceil((hi - lo) / step - 1e-12) + 1


# -------------------------------------------------------------------- grids

def test_grid_spanning_covers_endpoints():
    g = Grid.spanning(0.5, 2.0, 0.2)
    v = g.values()
    assert v[0] == 0.5 and v[-1] == 2.0
    assert g.count == 9 and g.spacing <= 0.2


def test_grid_circle_wraps():
    g = Grid.circle(0.1)
    assert g.count == 63
    assert g.snap(2 * math.pi - 1e-9) == 0
    assert g.snap(-0.1) == g.count - 1
    assert g.neighbors(0) == [0, 1, g.count - 1]


def test_angular_snap_recentres():
    g = Grid.spanning(-0.2, 0.2, 0.05, angular=True)
    assert g.values()[g.snap(2 * math.pi + 0.1)] == pytest.approx(0.1)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0.01, 1))
def test_grid_snap_within_half_spacing(lo, width, step):
    g = Grid.spanning(lo, lo + width, step)
    for x in np.linspace(lo, lo + width, 17):
        assert abs(g.values()[g.snap(x)] - x) <= g.spacing / 2 + 1e-12


@given(st.floats(0, 3), st.floats(0.01, 4), st.floats(0.01, 1), st.booleans())
def test_refined_grid_nests(lo, width, step, periodic):
    g = Grid.circle(step) if periodic else Grid.spanning(lo, lo + width, step)
    r = g.refined()
    np.testing.assert_allclose(r.values()[::2], g.values(), atol=1e-12)
    assert r.spacing == pytest.approx(g.spacing / 2)


# ---------------------------------------------------------------- cover sizes

def test_cover_cardinalities_match_formula():
    p = CoverParams(32, 0.5, 2.0)
    delta = 0.5 / 5
    cover = build_cover_2d(p, cap=None)
    rot = math.ceil(2 * math.pi / (delta / math.sqrt(2)) - 1e-12)
    scale = grid_count(0.5, 2.0, delta / math.sqrt(2))
    trans = grid_count(-2 * math.sqrt(2), 1 + 2 * math.sqrt(2), math.sqrt(2) * delta)
    assert cover.cardinalities() == dict(theta1=rot, sx=scale, sy=scale, theta2=rot,
                                         tx=trans, ty=trans)
    assert (rot, scale, trans) == (89, 23, 49)
    assert cover.size == rot ** 2 * scale ** 2 * trans ** 2 == 10_060_691_809


def test_cover_size_independent_of_n():
    sizes = {build_cover_2d(CoverParams(n, 0.5), cap=None).size for n in (8, 32, 256, 4096)}
    assert len(sizes) == 1


def test_enumeration_length_matches_size():
    cover = Cover2D(CoverParams(16, 0.4), SMALL)
    rows = np.array([T.as_row() for T in cover])
    assert len(rows) == cover.size == math.prod(cover.shape)
    np.testing.assert_array_equal(rows, cover.rows_at(np.arange(cover.size)))
    params = cover.params_at(np.arange(cover.size))
    assert len(np.unique(params, axis=0)) == cover.size


def test_halving_delta_grows_size_polynomially():
    a = build_cover_2d(CoverParams(32, 0.8), cap=None).size
    b = build_cover_2d(CoverParams(32, 0.4), cap=None).size
    # six parameters: the ratio tends to 2^6 as the grids get finer
    assert 32 < b / a <= 64


def test_capacity_error_is_explicit():
    with pytest.raises(CapacityError):
        build_cover_2d(CoverParams(32, 0.5), cap=10**6)


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5, 2.0])
def test_params_reject_bad_delta(bad):
    with pytest.raises(DomainError):
        CoverParams(32, bad)


def test_scale_range_must_respect_c():
    with pytest.raises(DomainError):
        Cover2D(CoverParams(16, 0.5, 2.0), Family2D(scale=(0.4, 1.0)))


# --------------------------------------------------------------- membership

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_digits_round_trip(index):
    cover = build_cover_2d(CoverParams(32, 0.5), cap=None)
    index = index % cover.size
    assert int(cover.index_of(cover.digits(index))) == index


def test_member_is_its_own_nearest():
    cover = build_cover_2d(CoverParams(32, 0.5), cap=None)
    for index in [0, 12345, cover.size // 2, cover.size - 1]:
        T, d = nearest_member(cover, cover.member(index))
        assert d == pytest.approx(0, abs=1e-9)


def test_identity_is_close():
    p = CoverParams(32, 0.5)
    cover = build_cover_2d(p, cap=None)
    assert nearest_member(cover, AffineMap2D.identity())[1] <= p.radius


def test_perturbed_member():
    p = CoverParams(32, 0.5)
    cover = build_cover_2d(p, cap=None)
    T = cover.member(4_000_000_123)
    shift = p.delta * p.n / 2
    moved = AffineMap2D(T.A, T.t + [shift, 0])
    _, d = nearest_member(cover, moved)
    assert d <= shift + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 32, 100]))
def test_snap_within_accumulation_bound(seed, n):
    p = CoverParams(n, 0.5)
    cover = build_cover_2d(p, cap=None)
    T = cover.family.sample(p, np.random.default_rng(seed))
    d = linf_distance(T, cover.member(cover.snap(T)), n)
    assert d <= snap_accumulation_bound(p) + 1e-9


def test_refined_cover_contains_the_coarse_one():
    cover = Cover2D(CoverParams(16, 0.4), SMALL)
    fine = cover.refined()
    assert fine.params.delta_prime == 0.2
    rng = np.random.default_rng(0)
    for index in rng.integers(0, cover.size, 50):
        digits = cover.digits(index)
        same = fine.member(int(fine.index_of(2 * digits)))
        assert linf_distance(same, cover.member(int(index)), 16) < 1e-9


def test_nearest_never_worse_than_snap():
    p = CoverParams(32, 0.5)
    small = Cover2D(p, SMALL)
    big = build_cover_2d(p, cap=None)
    assert small.size <= 200_000 < big.size
    rng = np.random.default_rng(1)
    for cover in (small, big):
        for _ in range(10):
            T = cover.family.sample(p, rng)
            snapped = linf_distance(T, cover.member(cover.snap(T)), p.n)
            assert cover.nearest(T)[1] <= snapped + 1e-9


def test_exhaustive_search_is_optimal():
    p = CoverParams(16, 0.4)
    cover = Cover2D(p, SMALL)
    T = cover.family.sample(p, np.random.default_rng(2))
    everything = [linf_distance(T, M, 16) for M in cover]
    assert cover.nearest(T) == (int(np.argmin(everything)), pytest.approx(min(everything)))


def test_certificate_small_run():
    cert = certify(build_cover_2d(CoverParams(32, 0.5), cap=None), 100, seed=3)
    assert cert.failures == 0 and cert.pass_rate == 1.0
    assert cert.max_distance <= cert.radius


# ------------------------------------------------------------ restricted 3D

def test_restricted_cover_structure():
    p = CoverParams(16, 0.5)
    cover = build_cover_3d_restricted(p, SMALL, IntensityFamily(con=(0.5, 0.7), bri=(0.0, 0.2)))
    assert cover.size == cover.planar.size * cover.shape[6] * cover.shape[7]
    T, L = cover.member(cover.size - 1)
    assert L == IntensityMap(0.7, 0.2)
    R = cover.restricted(cover.size - 1)
    assert R.zshift == pytest.approx(0.2 * 16)
    rows = cover.rows3d_at([cover.size - 1])[0]
    assert AffineMap3D.from_row(rows) == R.as_affine()


def test_restricted_identity_and_certificate():
    p = CoverParams(16, 0.5)
    cover = build_cover_3d_restricted(p, cap=None)
    ident = RestrictedMap3D(AffineMap2D.identity())
    index, d = cover.nearest(ident)
    assert d <= p.radius
    assert linf_restricted(cover.restricted(index), ident, 16) == pytest.approx(d)
    cert = certify(cover, 60, seed=2)
    assert cert.failures == 0


# ------------------------------------------------------------------ full 3D

def test_full_3d_cover_shape():
    p = CoverParams(16, 1.0)
    cover = build_cover_3d_full(p, cap=None)
    assert len(cover.shape) == 12
    fine = cover.refined()
    ratio = fine.size / cover.size
    assert 2 ** 11 < ratio <= 2 ** 12


def test_full_3d_identity_and_members():
    p = CoverParams(16, 1.0)
    cover = build_cover_3d_full(p, cap=None)
    assert cover.nearest(AffineMap3D.identity())[1] <= p.radius
    rng = np.random.default_rng(5)
    for _ in range(4):
        digits = [int(rng.integers(0, k)) for k in cover.shape]
        index = int(cover.index_of(digits))
        d = cover.nearest(cover.member(index))[1]
        if len(set(digits[3:6])) == 3:
            assert d < 1e-6
        else:
            # repeated scales leave the rotations of the split underdetermined
            assert d <= p.radius


def test_full_3d_certificate_coarse():
    p = CoverParams(16, 1.0)
    fam = Family3D(rotation1=((0, 0.5), (0, 0.5), (0, 0.5)), rotation2=((0, 0.5), (0, 0.5), (0, 0.5)),
                   scale=(0.8, 1.25), translation=(-0.2, 0.2))
    cover = Cover3DFull(p, fam, cap=None)
    cert = certify(cover, 40, seed=4)
    assert cert.failures == 0


# ---------------------------------------------------------------- candidate lists

def test_integer_translations():
    cands = integer_translations(16, 0, 2)
    assert cands.size == 9
    assert cands.member(5) == AffineMap2D.translation(1, 2)
    assert cands.nearest(AffineMap2D.translation(1.2, 1.9)) == (5, pytest.approx(math.hypot(0.2, 0.1)))
    with pytest.raises(DomainError):
        CandidateList([], 16)
