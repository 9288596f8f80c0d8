import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kohnmult.multipliers import bochner_riesz, norm_N2, smooth_bump_multiplier, szego
from kohnmult.sphere_spectrum import (
    SphereParams,
    heat_trace_brute,
    heat_trace_sum,
    iter_lattice,
    lattice_multiplier_apply,
    lattice_point,
    lift_multiplier,
    weighted_plancherel_bound,
    verify_spectral_relations,
)


def harmonic_dim(N: int, k: int) -> int:
    """Dimension of degree-k harmonic polynomials on R^N (independent oracle)."""
    if k == 0:
        return 1
    if k == 1:
        return N
    return math.comb(k + N - 1, N - 1) - math.comb(k + N - 3, N - 1)


def test_lattice_examples():
    pt = lattice_point(SphereParams(2), 1, 1)
    assert (pt.dim, pt.lamL, pt.lamU, pt.lamB) == (3, 8, 0, 4)
    pt = lattice_point(SphereParams(3), 1, 1)
    assert (pt.dim, pt.lamL, pt.lamB) == (8, 12, 6)
    assert lattice_point(SphereParams(2), 0, 0).lamL == 0


def test_lattice_domain_errors():
    with pytest.raises(ValueError):
        SphereParams(1)
    with pytest.raises(OverflowError):
        lattice_point(SphereParams(2), 10**4 + 1, 0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_bihomogeneous_dimensions_sum_to_harmonic_dimension(n):
    P = SphereParams(n)
    for k in range(0, 12):
        total = sum(lattice_point(P, p, k - p).dim for p in range(k + 1))
        assert total == harmonic_dim(2 * n, k)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**4), st.integers(0, 10**4))
def test_spectral_identity_and_sandwich(n, p, q):
    pt = lattice_point(SphereParams(n), p, q)
    assert 2 * pt.lamB == pt.lamL - pt.lamU
    if pt.lamB:
        assert pt.lamB <= pt.lamL <= (n + 1) * pt.lamB


def test_relation_report_counts():
    r = verify_spectral_relations(SphereParams(2), 50)
    assert r.points == 51 * 51
    assert r.ok


@pytest.mark.parametrize("n,h", [(2, 0), (2, 1), (3, 0), (3, 2)])
def test_heat_trace_matches_brute_force(n, h):
    P = SphereParams(n)
    fast = heat_trace_sum(P, 1.0, h)
    brute = heat_trace_brute(P, 1.0, h, 40)
    assert fast == pytest.approx(brute, rel=1e-12)


def test_heat_trace_large_t_tends_to_one():
    assert heat_trace_sum(SphereParams(2), 60.0) == pytest.approx(1.0, abs=1e-20)
    with pytest.raises(ValueError):
        heat_trace_sum(SphereParams(2), 0.0)


def test_bochner_riesz_lattice_value():
    tab = lattice_multiplier_apply(bochner_riesz(1.0, 1.0 / 9.0), SphereParams(2), 3)
    # lamB(1,1) = 4, so F = 1 - 4/9
    assert tab[(1, 1)].real == pytest.approx(5.0 / 9.0, abs=1e-15)
    assert tab[(3, 3)] == 0


def test_szego_is_kernel_projection():
    tab = lattice_multiplier_apply(szego(), SphereParams(2), 4)
    assert all((v == 1) == (q == 0) for (p, q), v in tab.items())


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.floats(2.0, 30.0), st.floats(0.05, 5.0), st.floats(0.0, 1.0))
def test_lifting_is_exact_on_the_lattice(n, R, t, u):
    a = R / 16 + u * 0.5 * R
    F = smooth_bump_multiplier(a, min(R, a + 0.3 * R))
    G = lift_multiplier(F, t, SphereParams(n), R)
    P = SphereParams(n)
    for pt in iter_lattice(P, int(2 * R) + 2):
        if pt.lamB > (2 * R) ** 2:
            continue
        lhs = G(float(pt.lamL), float(pt.lamU))
        rhs = F(math.sqrt(pt.lamB)) * (-math.expm1(-t * t * pt.lamL))
        assert abs(lhs - rhs) <= 1e-12 * F.sup_abs()


def test_lifting_rejects_bad_support():
    with pytest.raises(ValueError):
        lift_multiplier(smooth_bump_multiplier(0.1, 2.0), 1.0, SphereParams(2), R=4.0)
    G = lift_multiplier(smooth_bump_multiplier(1.0, 2.0), 1.0, SphereParams(2))
    assert G(0.0, 5.0) == 0


def test_plancherel_comparison_formula():
    N, t, theta = 8, 0.2, 0.4
    F = smooth_bump_multiplier(2.0, 6.0)
    rep = weighted_plancherel_bound(F, N, t, theta, SphereParams(2))
    expect = N ** (4 - theta) * norm_N2(F.rescaled(N), N) ** 2 * max(1.0, (N * t) ** 2) ** 2
    assert rep.comparison == pytest.approx(expect, rel=1e-12)
    assert 0 < rep.bound
    assert set(rep.as_dict()) >= {"N", "theta", "t", "bound", "comparison", "ratio"}


def test_plancherel_domain_errors():
    with pytest.raises(ValueError):
        weighted_plancherel_bound(smooth_bump_multiplier(2.0, 9.0), 8, 0.1, 0.0, SphereParams(2))
    with pytest.raises(ValueError):
        weighted_plancherel_bound(smooth_bump_multiplier(2.0, 6.0), 8, 0.1, 1.0, SphereParams(2))
