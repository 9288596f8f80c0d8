import math

import numpy as np
import pytest

from kohnmult import metric_measure as mm


@pytest.fixture(scope="module")
def sphere150():
    return mm.build_sphere_cloud(2, 150, 0)


@pytest.fixture(scope="module")
def heis150():
    return mm.build_heisenberg_cloud(2, [1.0], 2.0, 150, 0)


def test_cycle_ball_volumes():
    c = mm.cycle_graph(64)
    # open ball of radius 2.5 around a vertex: distances 0, 1, 1, 2, 2
    assert c.volume(0, 2.5) == 5
    assert c.volume(0, 2.0) == 3
    assert c.triangle_constant() == 1.0
    assert c.diameter == 32


def test_space_validation():
    with pytest.raises(ValueError):
        mm.FiniteMetricMeasureSpace(np.array([[0.0, 1.0], [2.0, 0.0]]), np.ones(2))
    with pytest.raises(ValueError):
        mm.FiniteMetricMeasureSpace(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.0, -1.0]))


def test_product_space_sum_metric():
    A, B = mm.cycle_graph(5), mm.cycle_graph(7)
    P = mm.product_space(A, B)
    i, j, k, l = 1, 3, 4, 6
    assert P.dist[i * 7 + j, k * 7 + l] == A.dist[i, k] + B.dist[j, l]
    assert P.m == 35


def test_single_point():
    s = mm.single_point()
    assert s.m == 1 and s.volume(0, 1.0) == 1


def test_cycle_volume_exponent():
    Q, _ = mm.fit_volume_exponent(mm.cycle_graph(64))
    assert Q == pytest.approx(1.0, abs=0.1)


def test_sphere_cloud_metric_and_weight(sphere150):
    sp = sphere150.space
    assert sp.c_tri == 1.0
    assert sp.total_mass == pytest.approx(2 * math.pi**2)
    # the weight w is comparable to rho, with constant sqrt 2 in the limit
    assert 1.0 <= sphere150.weight_ratio() <= 3.0


def test_structure_constants(sphere150, heis150):
    for sp in (sphere150.space, heis150):
        c = mm.structure_constants(sp)
        assert 2.5 <= c.Q <= 5.0
        assert c.Cpp <= 4.0 + 1e-12
        assert 0 <= c.N <= c.Q
        assert c.Cp >= 1.0


def test_heisenberg_cloud_is_metric(heis150):
    assert heis150.c_tri == pytest.approx(1.0)
    assert heis150.meta["sampled"]


def test_levi_flat_rejected():
    with pytest.raises(ValueError):
        mm.build_heisenberg_cloud(2, [0.0], 2.0, 50, 0)


def test_weight_integrals_trivial_exponents():
    cloud = mm.build_sphere_cloud(2, 2000, 1, tables=False)
    rep = mm.check_weight_integrals(cloud, 0.0, 0.0, [0.5, 1.0], centers=20)
    assert rep.ratio_int2[0] == pytest.approx(2 * math.pi**2)


def test_weight_integrals_bounded():
    cloud = mm.build_sphere_cloud(2, 8000, 3, tables=False)
    rep = mm.check_weight_integrals(cloud, 1.0, 4.0, np.logspace(-2, 0, 7), centers=100)
    assert rep.in_scope_int
    assert max(rep.ratio_int) <= 3.0


def test_save_load_roundtrip(tmp_path):
    sp = mm.product_space(mm.cycle_graph(4), mm.cycle_graph(3))
    path = tmp_path / "space.bin"
    mm.save_space(sp, path)
    back = mm.load_space(path)
    assert np.array_equal(back.dist, sp.dist)
    assert np.array_equal(back.mu, sp.mu)
    raw = path.read_bytes()
    assert len(raw) == 24 + 8 * sp.m * sp.m
    assert int.from_bytes(raw[:8], "little") == sp.m
