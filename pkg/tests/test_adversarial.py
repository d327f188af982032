import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subpix.adversarial import (AdversarialParams, gen_d1, gen_d2, max_shift,
                                min_translation_distance, planted_translation,
                                separation_experiment, translation_distances)
from subpix.core import DomainError, perimeter
from subpix.matcher import exact_distance_under
from subpix.transform import AffineMap2D


def blocks_constant(v, k):
    n = v.shape[0]
    b = v.reshape(n // k, k, n // k, k)
    return bool(np.all(b == b[:, :1, :, :1]))


def test_params_validation():
    with pytest.raises(DomainError):
        AdversarialParams(10, 3)
    with pytest.raises(DomainError):
        AdversarialParams(8, 0)
    with pytest.raises(DomainError):
        AdversarialParams(8, 1, -1)


def test_single_block_images_are_constant():
    for seed in range(5):
        for img in gen_d1(AdversarialParams(16, 16, seed)):
            assert img.values.min() == img.values.max()


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(32, 1), (32, 2), (64, 4), (64, 8)]), st.integers(0, 2**32 - 1))
def test_block_structure(nk, seed):
    n, k = nk
    p = AdversarialParams(n, k, seed)
    for img in gen_d1(p) + gen_d2(p)[:2]:
        assert blocks_constant(img.values, k)


def test_d1_marginals():
    a, b = gen_d1(AdversarialParams(64, 1, 3))
    for img in (a, b):
        assert abs(img.values.mean() - 0.5) <= 0.07
    means = [img.values.mean() for s in range(20) for img in gen_d1(AdversarialParams(64, 2, s))]
    assert 0.45 <= np.mean(means) <= 0.55


def test_d1_perimeter_is_large():
    n = 64
    big = sum(perimeter(img) >= n * n / 4
              for s in range(100) for img in gen_d1(AdversarialParams(n, 1, s)))
    assert big == 200


def test_generators_are_deterministic():
    p = AdversarialParams(32, 2, 9)
    for x, y in zip(gen_d1(p), gen_d1(p)):
        np.testing.assert_array_equal(x.values, y.values)
    a, b = gen_d2(p), gen_d2(p)
    assert a[2] == b[2]
    np.testing.assert_array_equal(a[1].values, b[1].values)


def test_zero_shift_override():
    M1, M2, shift = gen_d2(AdversarialParams(32, 1, 4), shift=(0, 0))
    assert shift == (0, 0)
    np.testing.assert_array_equal(M1.values, M2.values)


def test_shift_range_and_planted_map():
    seen = set()
    for s in range(60):
        M1, M2, (sh, sv) = gen_d2(AdversarialParams(64, 2, s))
        assert 0 <= sh <= max_shift(64, 2) and 0 <= sv <= max_shift(64, 2)
        assert sh % 2 == 0 and sv % 2 == 0
        seen.add((sh, sv))
        v1, v2 = M1.values, M2.values
        np.testing.assert_array_equal(v2[sh:, sv:], v1[:64 - sh, :64 - sv])
        T = planted_translation((sh, sv))
        assert exact_distance_under(M1, M2, T) <= 15 / 64 + 1e-12
    assert len(seen) > 10


def test_fft_distances_match_brute_force():
    n = 12
    M1, M2 = gen_d1(AdversarialParams(n, 1, 5))
    d = translation_distances(M1, M2)
    for a in range(-n + 1, n):
        for b in range(-n + 1, n):
            want = exact_distance_under(M1, M2, AffineMap2D.translation(a, b))
            assert d[a + n - 1, b + n - 1] == pytest.approx(want, abs=1e-12)


def test_min_translation_on_planted_pair():
    M1, M2, shift = gen_d2(AdversarialParams(64, 1, 6))
    d, (a, b) = min_translation_distance(M1, M2)
    assert d <= exact_distance_under(M1, M2, planted_translation(shift))
    assert d == pytest.approx(exact_distance_under(M1, M2, AffineMap2D.translation(a, b)))


def test_separation_experiment_records():
    rows = separation_experiment([32], 1, 0.3, 0.1, seeds=[0, 1])
    assert len(rows) == 4
    for r in rows:
        assert 0 <= r["estimated"] <= 1 and 0 <= r["exact_at_result"] <= 1
        assert r["queries"] > 0 and r["cover_size"] == 25
    for r in rows:
        if r["family"] == "d2":
            assert r["planted"] <= 4 / 16
            assert r["estimated"] <= 4 / 16 + 0.1
        else:
            assert r["min_translation"] > 0.3
