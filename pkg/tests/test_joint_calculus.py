import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kohnmult import joint_calculus as jc
from kohnmult.kernels import Kernel, kernel_from_symmetrized
from kohnmult.metric_measure import build_sphere_cloud, cycle_graph
from kohnmult.verify import lemma_failures


@pytest.fixture(scope="module")
def poly2():
    return jc.make_commuting_tuple(cycle_graph(40), jc.TupleSpec("poly", seed=3, count=2))


@pytest.fixture(scope="module")
def torus():
    return jc.product_of_cycles(6, 7)


def test_tuple_certification(poly2):
    assert poly2.commutator_residual <= 1e-10
    assert poly2.eigen_residual <= 1e-9
    for j in range(poly2.count):
        M = poly2.symmetrized(j)
        V, lam = poly2.vectors, poly2.eigenvalues[j]
        assert np.max(np.abs((V * lam) @ V.conj().T - M)) <= 1e-9


def test_noncommuting_tuple_rejected():
    sp = cycle_graph(10)
    rng = np.random.default_rng(0)
    A, B = (jc.local_hermitian(sp, rng) for _ in range(2))
    with pytest.raises(jc.PreconditionError):
        jc.certify_tuple(sp, [kernel_from_symmetrized(sp, A), kernel_from_symmetrized(sp, B)])


def test_non_selfadjoint_rejected():
    sp = cycle_graph(6)
    K = Kernel(sp, np.triu(np.ones((6, 6))))
    with pytest.raises(jc.PreconditionError):
        jc.certify_tuple(sp, [K])


def test_repeated_eigenvalues_split():
    # L and D on a cycle share eigenspaces only jointly: L alone is doubly degenerate
    t = jc.make_commuting_tuple(cycle_graph(12), jc.TupleSpec("derivative"))
    assert t.eigen_residual <= 1e-9


def test_oracle_reproduces_operators(poly2):
    K = jc.oracle_calculus(poly2, lambda a, b: a)
    assert np.max(np.abs(K.K - poly2.kernels[0].K)) <= 1e-9
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        jc.oracle_calculus(poly2, lambda a, b: 1 / (a - a))


def test_oracle_on_sphere_cloud():
    sp = build_sphere_cloud(2, 60, 1).space
    t = jc.make_commuting_tuple(sp, jc.TupleSpec("heat"))
    K = jc.oracle_calculus(t, lambda l: l * l)
    LL = t.kernels[0].operator_matrix() @ t.kernels[0].operator_matrix()
    assert np.max(np.abs(K.operator_matrix() - LL)) <= 1e-9 * np.max(np.abs(LL))


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=2, max_size=2))
def test_exp0_routes_agree(h):
    t = jc.make_commuting_tuple(cycle_graph(24), jc.TupleSpec("poly", seed=1, count=2))
    E = jc.exp0_kernel(t, h)
    assert jc.unitarity_defect(E) <= 1e-9


def test_exp0_zero_index_is_zero(poly2):
    assert np.max(np.abs(jc.exp0_kernel(poly2, (0, 0)).K)) <= 1e-15


def test_fourier_calculus_accuracy(poly2):
    t = poly2.scaled(2.5 / np.max(np.abs(poly2.eigenvalues)))
    r = jc.fourier_calculus(t, lambda x, y: np.sin(x) * np.cos(2 * y), 8)
    assert r.deviation <= r.tail + 1e-9
    assert r.deviation <= 1e-10


def test_fourier_calculus_preconditions(poly2):
    with pytest.raises(ValueError, match="vanish"):
        jc.fourier_calculus(poly2, lambda x, y: np.cos(x), 4)
    with pytest.raises(ValueError, match="pi"):
        jc.fourier_calculus(poly2.scaled(5.0), lambda x, y: np.sin(x), 4)


def test_fourier_coefficients_of_trig_polynomial():
    c = jc.fourier_coefficients(lambda x: np.sin(x) + 0.5 * np.cos(3 * x), 1, 16)
    assert c[1] == pytest.approx(-0.5j)
    assert c[-1] == pytest.approx(0.5j)
    assert c[3] == pytest.approx(0.25)


def test_annular_decomposition(poly2):
    K = poly2.kernels[0]
    pieces = jc.annular_decomposition(K, 1.5)
    assert np.allclose(sum(p.K for p in pieces), K.K)
    supports = [p.K != 0 for p in pieces]
    for a, b in itertools.combinations(supports, 2):
        assert not np.any(a & b)
    with pytest.raises(ValueError):
        jc.annular_decomposition(K, 0.5)


def test_select_heavy_indices_examples():
    assert jc.select_heavy_indices([5, 0, 3, 1], 2) == [0]
    assert jc.select_heavy_indices([0, 0, 0], 3) == []
    assert jc.select_heavy_indices([1, 1, 1, 1], 1) == []
    with pytest.raises(ValueError):
        jc.select_heavy_indices([1], 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("nu", [1, 2, 3])
def test_selection_lemma_exhaustive_small(n, nu):
    betas = np.array(list(itertools.product(range(5), repeat=n)), dtype=np.int64)
    fails, cases = lemma_failures(betas, nu)
    assert fails == 0 and cases == 5**n


def test_lemma_checker_detects_bad_selection(monkeypatch):
    monkeypatch.setattr(jc, "select_heavy_indices", lambda b, nu: [])
    fails, _ = lemma_failures(np.array([[4, 0, 0]]), 2)
    assert fails == 1


@pytest.mark.parametrize("abQ,gamma", [((3, 1, 4), 11.0), ((10, 0, 4), 3.2), ((2, 0, 1), 1.75), ((4, 1, 2), 11 / 3)])
def test_gamma_exponent(abQ, gamma):
    assert jc.gamma_exponent(*abQ) == pytest.approx(gamma)


def test_gamma_exponent_domain():
    with pytest.raises(ValueError):
        jc.gamma_exponent(1, 1, 4)


def test_growth_precondition_violation(poly2):
    with pytest.raises(jc.PreconditionError) as exc:
        jc.growth_experiment(poly2, 2.0, 0.0, [(1, 0)], kappa=1e-3, Q=1.0)
    assert "K_1_a" in exc.value.measured


def test_growth_slope_on_cycle():
    t = jc.make_commuting_tuple(cycle_graph(120), jc.TupleSpec("poly", seed=0, count=2))
    kap = jc.tuple_kappa(t, 2.0)
    rep = jc.growth_experiment(t, 2.0, 0.0, jc.default_hset(2, 0), math.ceil(max(kap.values())), 1.0)
    assert rep.passed
    assert rep.route_gap <= 1e-9


def test_psi_catalog_inverse_pairs():
    lam = np.random.default_rng(0).uniform(-3, 3, size=(2, 50))
    for tag in ("heat-derivative", "product", "fourier"):
        spec = jc.psi_catalog(tag)
        assert np.max(np.abs(spec.phi(spec.psi(lam)) - lam)) <= 1e-12
    spec = jc.psi_catalog("heat")
    assert np.max(np.abs(spec.phi(spec.psi(lam[:1])) - lam[:1])) <= 1e-12


def test_psi_zero_rejected(poly2):
    bad = jc.PsiSpec("bad", 2, lambda l: l, lambda w: w, lambda w: np.ones(w.shape[1:], bool))
    with pytest.raises(ValueError, match="Psi"):
        jc.verify_hypotheses(poly2, bad, jc.DilationSystem((1.0, 1.0)), [1.0])


def test_dilation_system():
    d = jc.DilationSystem((2.0, 1.0))
    assert np.allclose(d.apply(np.array([[1.0], [1.0]]), 3.0), [[9.0], [3.0]])
    assert np.all(d.apply(np.ones((2, 1)), 0.0) == 0)
    with pytest.raises(ValueError):
        jc.DilationSystem((0.0,))


def test_product_catalog_kernels_factor(torus):
    t = jc.make_commuting_tuple(torus, jc.TupleSpec("tensor"))
    r, h1, h2 = 1.7, 2.0, 2.0
    d = jc.DilationSystem((h1, h2))
    spec = jc.psi_catalog("product")
    K1 = jc.oracle_calculus(t, lambda a, b: spec.psi(d.apply(np.stack([a, b]), r))[0])
    m1, m2 = torus.meta["cycles"]
    heat = lambda L, s: jc._function_of(L, lambda w: np.exp(-s * w))
    ref = np.kron(heat(jc.cycle_laplacian(m1), 2 * r**h1), heat(jc.cycle_laplacian(m2), r**h2))
    assert np.max(np.abs(K1.K - ref)) <= 1e-9


def test_heat_catalog_non_trending():
    t = jc.make_commuting_tuple(cycle_graph(48), jc.TupleSpec("heat"))
    rep = jc.verify_hypotheses(t, jc.psi_catalog("heat"), jc.DilationSystem((2.0,)), np.logspace(-1.5, 2.5, 9))
    assert rep.residual_A <= 1e-12
    assert rep.non_trending
