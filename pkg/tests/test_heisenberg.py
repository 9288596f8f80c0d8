import math

import numpy as np
import pytest
import scipy.sparse as sp
import sympy as sy

from kohnmult import heisenberg as hz

P2 = hz.HeisenbergParams(2, [1.0])


@pytest.fixture(scope="module")
def grid8():
    return hz.Grid(2.0, 8, 3)


def test_group_law_examples():
    assert np.allclose(hz.group_multiply([0, 1, 0], [0, 0, 1], P2), [-2, 1, 1])
    assert np.allclose(hz.dilate([1, 1, 1], 2.0), [4, 2, 2])
    with pytest.raises(ValueError):
        hz.dilate([1, 1, 1], 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        hz.HeisenbergParams(1, [])
    with pytest.raises(ValueError):
        hz.HeisenbergParams(3, [1.0])
    with pytest.raises(ValueError):
        hz.HeisenbergParams(2, [1.0], frozenset({2}))
    assert hz.HeisenbergParams(3, [1.0, 2.0], {1}).c_J == -1.0


@pytest.mark.parametrize("n", [2, 3])
def test_dilation_is_group_automorphism(n):
    rng = np.random.default_rng(n)
    p = hz.HeisenbergParams(n, rng.uniform(-2, 2, n - 1))
    u, v = rng.uniform(-3, 3, (2, 100000, p.dim))
    R = rng.uniform(0.1, 10, (100000, 1))
    lhs = hz.dilate(hz.group_multiply(u, v, p), R)
    rhs = hz.group_multiply(hz.dilate(u, R), hz.dilate(v, R), p)
    scale = 1 + np.abs(lhs)
    assert np.max(np.abs(lhs - rhs) / scale) <= 1e-12


def test_group_inverse_and_gauge_homogeneity():
    rng = np.random.default_rng(0)
    u = rng.standard_normal((50, 3))
    assert np.allclose(hz.group_multiply(u, hz.group_inverse(u), P2), 0)
    assert np.allclose(hz.gauge(hz.dilate(u, 3.0)), 3 * hz.gauge(u))


def test_continuum_factorization_symbolic():
    # (1/4) Z^* Z with Z = U1 + i U2 equals -(1/4)(U1^2 + U2^2) + i lam U0
    u0, u1, u2, lam = sy.symbols("u0 u1 u2 lam", real=True)
    f = sy.Function("f")(u0, u1, u2)
    U0 = lambda g: sy.diff(g, u0)
    U1 = lambda g: sy.diff(g, u1) + 2 * lam * u2 * sy.diff(g, u0)
    U2 = lambda g: sy.diff(g, u2) - 2 * lam * u1 * sy.diff(g, u0)
    Z = lambda g: U1(g) + sy.I * U2(g)
    Zs = lambda g: -U1(g) + sy.I * U2(g)
    lhs = Zs(Z(f)) / 4
    rhs = -(U1(U1(f)) + U2(U2(f))) / 4 + sy.I * lam * U0(f)
    assert sy.simplify(sy.expand(lhs - rhs)) == 0
    assert sy.simplify(U1(U2(f)) - U2(U1(f)) + 4 * lam * U0(f)) == 0


@pytest.mark.parametrize("scheme", ["factored", "direct"])
def test_operator_hermitian_and_kills_constants(grid8, scheme):
    op = hz.assemble_model_operator(P2, grid8, scheme)
    assert op.asymmetry() == 0.0
    assert np.max(np.abs(op.apply(np.ones(grid8.size)))) <= 1e-12


def test_unknown_scheme(grid8):
    with pytest.raises(ValueError):
        hz.assemble_model_operator(P2, grid8, "upwind")


@pytest.mark.parametrize("scheme", ["factored", "direct"])
@pytest.mark.parametrize("J", [frozenset(), frozenset({1})])
def test_grid_matches_pointwise_stencil(scheme, J):
    p = hz.HeisenbergParams(2, [0.7], J)
    grid = hz.Grid(2.0, 12, 3)
    f = hz.gaussian_bump(p, width=0.6)
    X = grid.coords()
    op = hz.assemble_model_operator(p, grid, scheme)
    got = op.apply(f(X))
    ref = hz.pointwise_model_operator(p, grid.h, scheme=scheme)(f)(X)
    # nodes at least two steps from the periodic seam in every direction
    interior = np.all(np.abs(X) <= grid.S - 2 * grid.h - 1e-12, axis=1)
    assert interior.sum() > 0
    assert np.max(np.abs(got[interior] - ref[interior])) <= 1e-10


def test_form_operator_counts():
    grid = hz.Grid(1.0, 8, 3)
    assert len(hz.form_operator(P2, grid, 0)) == 1
    assert list(hz.form_operator(P2, grid, 1)) == [(1,)]
    with pytest.raises(ValueError):
        hz.form_operator(P2, grid, 2)


def test_form_operator_counts_higher_n(monkeypatch):
    monkeypatch.setattr(hz, "assemble_model_operator", lambda p, g, s: p.J)
    p4 = hz.HeisenbergParams(4, [1.0, 2.0, 3.0])
    grid = hz.Grid(1.0, 8, 7)
    for j in range(4):
        ops = hz.form_operator(p4, grid, j)
        assert len(ops) == math.comb(3, j)
        assert all(frozenset(J) == v for J, v in ops.items())


def test_factored_scheme_nonnegative(grid8):
    w = hz.assemble_model_operator(P2, grid8, "factored").smallest_eigenvalues(4)
    assert w[0] >= -1e-6


def test_direct_scheme_has_grid_scale_negative_modes(grid8):
    # documented behaviour: the literal assembly is not positive on coarse grids
    w = hz.assemble_model_operator(P2, grid8, "direct").smallest_eigenvalues(1)
    assert w[0] < -1.0


def test_rescale_trivial_cases():
    f = hz.gaussian_bump(P2)
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, (16, 3))
    assert hz.rescale_residual(P2, f, 1.0, 0.1, pts) == 0.0
    assert hz.rescale_residual(P2, lambda x: np.zeros(len(x)), 2.0, 0.1, pts) == 0.0
    with pytest.raises(ValueError):
        hz.rescale_check(P2, f, [-1.0])


def test_rescale_second_order():
    (rep,) = hz.rescale_check(P2, hz.gaussian_bump(P2), [2.0], h0=0.1, levels=4)
    assert 3.5 <= rep.richardson <= 4.5


def test_coo_roundtrip(tmp_path, grid8):
    op = hz.assemble_model_operator(P2, grid8)
    path = tmp_path / "op.coo"
    hz.export_coo(op, path)
    back = hz.import_coo(path)
    assert sp.issparse(back)
    assert abs(back - op.matrix).max() == 0


def test_model_laplacian_pair_commutes(grid8):
    L, T = hz.model_laplacian_pair(P2, grid8)
    C = L @ T - T @ L
    assert abs(C).max() <= 1e-10
    assert abs(L - L.conj().T).max() == 0
    assert abs(T - T.conj().T).max() == 0
