import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from kohnmult import kernels as kn
from kohnmult.metric_measure import build_sphere_cloud, cycle_graph, structure_constants

INF = math.inf


@pytest.fixture(scope="module")
def cyc():
    return cycle_graph(24)


@pytest.fixture(scope="module")
def cloud():
    return build_sphere_cloud(2, 80, 0).space


def test_identity_kernel_acts_as_identity(cloud):
    f = np.random.default_rng(0).standard_normal(cloud.m)
    assert np.allclose(kn.identity_kernel(cloud).apply(f), f)


def test_convolution_is_operator_composition(cloud):
    rng = np.random.default_rng(1)
    H, K = kn.random_kernel(cloud, rng, "dense"), kn.random_kernel(cloud, rng, "dense")
    f = rng.standard_normal(cloud.m)
    assert np.allclose(kn.convolve(H, K).apply(f), H.apply(K.apply(f)))


def test_adjoint_pairing(cloud):
    rng = np.random.default_rng(2)
    K = kn.random_kernel(cloud, rng, "dense")
    f, g = rng.standard_normal(cloud.m) + 0j, rng.standard_normal(cloud.m) + 1j
    lhs = np.sum(K.apply(f) * np.conj(g) * cloud.mu)
    rhs = np.sum(f * np.conj(kn.adjoint(K).apply(g)) * cloud.mu)
    assert lhs == pytest.approx(rhs)


def test_exp0_against_matrix_exponential(cloud):
    rng = np.random.default_rng(3)
    K = kn.random_kernel(cloud, rng, "decay")
    K = K * (1.0 / kn.ba_kernel_norm(K, 1.0))
    E = kn.exp0(K, 1.0)
    ref = sla.expm(K.operator_matrix()) - np.eye(cloud.m)
    assert np.max(np.abs(E.operator_matrix() - ref)) <= 1e-13


def test_exact_operator_norms(cloud):
    rng = np.random.default_rng(4)
    K = kn.random_kernel(cloud, rng, "dense")
    A = K.operator_matrix()
    assert kn.operator_norm(K, 1) == pytest.approx(np.abs(A).sum(axis=0).max())
    assert kn.operator_norm(K, INF) == pytest.approx(np.abs(A).sum(axis=1).max())
    assert kn.operator_norm(K, 2) == pytest.approx(np.linalg.norm(K.symmetrized(), 2))


def test_young_exponents():
    assert kn._young_exponents(INF, 1.0) == (INF, 0.0, 1.0)
    r, e1, e2 = kn._young_exponents(2.0, 1.0)
    assert (r, e1, e2) == (2.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        kn._young_exponents(2.0, 3.0)


def test_weighted_norm_monotone_in_weight(cloud):
    K = kn.random_kernel(cloud, np.random.default_rng(5), "dense")
    assert kn.weighted_norm(K, 2, 0.0) <= kn.weighted_norm(K, 2, 1.0) <= kn.weighted_norm(K, 2, 2.0)


def test_involution_and_algebra_identity(cyc):
    e = kn.AlgebraElement(1.5 - 2j, kn.random_kernel(cyc, np.random.default_rng(6), "decay"))
    I = kn.AlgebraElement.identity(cyc)
    assert np.allclose((e @ I).operator_matrix(), e.operator_matrix())
    assert e.star().norm(1.0) == pytest.approx(e.norm(1.0))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_suites_on_cycle(seed):
    sp = cycle_graph(16)
    consts = structure_constants(sp)
    assert kn.check_young(sp, 5, seed, consts).passed
    assert kn.check_composition(sp, 5, seed).passed
    assert kn.check_algebra(sp, 3, seed).passed


def test_suites_on_cloud(cloud):
    consts = structure_constants(cloud)
    assert kn.check_young(cloud, 30, 0, consts).passed
    assert kn.check_hoelder(cloud, 40, 0, consts).passed


def test_hoelder_constant_explicit(cyc):
    # p = 1, q = inf, a = 0, b = 2: sum_x (1+d)^{-2} over the cycle (V(y, 1) = 1)
    expect = sum((1 + cyc.dist[0, x]) ** -2 for x in range(cyc.m))
    assert kn.hoelder_constant(cyc, 1.0, INF, 0.0, 2.0) == pytest.approx(expect)
