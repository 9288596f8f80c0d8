import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kohnmult import multipliers as mp


def test_gaussian_l2_norm_oracle():
    # || e^{-x^2} ||_2 = (pi/2)^{1/4}
    val = mp.sobolev_norm(mp.gaussian(), 0.0, 2)
    assert val == pytest.approx((math.pi / 2) ** 0.25, rel=1e-9)


def test_gaussian_sobolev_norm_oracle():
    # ||(1+w^2)^{s/2} F^||_2 / sqrt(2 pi) with F^(w) = sqrt(pi) e^{-w^2/4}; s = 1 gives
    # (1/(2 pi)) int (1+w^2) pi e^{-w^2/2} dw = sqrt(pi/2) (1 + 1)
    val = mp.sobolev_norm(mp.gaussian(), 1.0, 2)
    assert val == pytest.approx(math.sqrt(2 * math.sqrt(math.pi / 2)), rel=1e-8)


def test_sobolev_norm_resolution_stable():
    F = mp.smooth_bump_multiplier(0.5, 2.0)
    a = mp.sobolev_norm(F, 1.5, 2, resolution=2**10)
    b = mp.sobolev_norm(F, 1.5, 2, resolution=2**12)
    assert a == pytest.approx(b, rel=1e-6)


def test_sup_norm_and_indicator():
    assert mp.sobolev_norm(mp.gaussian(), 0.0, math.inf) == pytest.approx(1.0, abs=1e-12)
    assert mp.sobolev_norm(mp.indicator(0, 1), 0.0, 2) == pytest.approx(1.0, rel=1e-3)


def test_rough_multiplier_warns():
    with pytest.warns(mp.ResolutionWarning):
        mp.sobolev_norm(mp.indicator(0, 1), 0.5, 2)


def test_smooth_multiplier_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mp.sobolev_norm(mp.smooth_bump_multiplier(1, 3), 2.0, 2)


def test_bochner_riesz_preset():
    F = mp.bochner_riesz(1.0, 1.0 / 9.0)
    assert F.support == (0.0, 3.0)
    assert F(np.array([2.0]))[0].real == pytest.approx(5 / 9)
    assert mp.bochner_riesz(0.0, 1.0)(np.array([0.5]))[0] == 1
    with pytest.raises(ValueError):
        mp.bochner_riesz(-1.0, 1.0)


def test_multiplier_masks_outside_support():
    F = mp.MultiplierFn(lambda x: np.ones_like(x), (1.0, 2.0))
    assert np.all(F(np.array([0.5, 2.5])) == 0)
    with pytest.raises(ValueError):
        mp.MultiplierFn(lambda x: x, (2.0, 1.0))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.3, 3.0))
def test_sloc_norm_dilation_invariant(a, c):
    F = mp.smooth_bump_multiplier(a, 3 * a)
    assert mp.sloc_norm(F.rescaled(c)) == pytest.approx(mp.sloc_norm(F), rel=0.05)


def test_sloc_norm_exact_under_factor_two():
    F = mp.smooth_bump_multiplier(1, 3)
    assert mp.sloc_norm(F.rescaled(2.0)) == pytest.approx(mp.sloc_norm(F), rel=1e-12)


def test_mollifier_moments():
    xi = mp.build_mollifier(4)
    mom = xi.moments(8)
    assert abs(mom[0] - 1) <= 1e-10
    assert np.max(np.abs(mom[1:])) <= 1e-10
    assert xi.half_width == 1 / 64


@pytest.mark.parametrize("deg", [0, 3, 8])
def test_mollifier_reproduces_polynomials(deg):
    xi = mp.build_mollifier(4)
    c = np.random.default_rng(deg).standard_normal(deg + 1)
    F = mp.MultiplierFn(lambda x: np.polynomial.polynomial.polyval(x, c), (-2.0, 2.0))
    x = np.linspace(-1.5, 1.5, 101)
    assert np.max(np.abs(mp.mollify(F, xi, 1)(x) - F(x))) <= 1e-8 * F.sup_abs()


def test_mollifier_rejects_bad_order():
    with pytest.raises(ValueError):
        mp.build_mollifier(0)


def test_norm_N2_examples():
    one = mp.MultiplierFn(lambda x: np.ones_like(x), (0.0, 1.0))
    assert mp.norm_N2(one, 16) == pytest.approx(1.0)
    half = mp.indicator(0.0, 0.5)
    # intervals touching [0, 1/2] (closed) are 5 of 8
    assert mp.norm_N2(half, 8) == pytest.approx(math.sqrt(5 / 8))
    with pytest.raises(ValueError):
        mp.norm_N2(mp.indicator(0.0, 2.0), 4)


@settings(max_examples=15, deadline=None)
@given(st.integers(-3, 0), st.integers(1, 4))
def test_dyadic_pieces_sum_to_F(kmin, kmax):
    F = mp.gaussian()
    lo, hi = mp.dyadic_exact_range(kmin, kmax)
    x = np.linspace(lo, hi, 64)
    assert np.max(np.abs(mp.sum_pieces(mp.dyadic_pieces(F, kmin, kmax), x) - F(x))) <= 1e-14


def test_dyadic_generator_partition():
    x = np.linspace(0.5, 40, 200)
    total = sum(mp.dyadic_generator(2.0**-k * x) for k in range(-4, 9))
    assert np.allclose(total, 1.0, atol=1e-14)
