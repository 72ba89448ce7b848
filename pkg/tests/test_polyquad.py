import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nipg1d.meshgen import MeshVariant, build_stype_mesh, uniform_mesh
from nipg1d.polyquad import (basis_eval, gauss_legendre_rule, lobatto_nodes,
                             local_basis)
from nipg1d.space import LEFT, RIGHT, DGSpace, dg_eval


def test_midpoint_rule():
    r = gauss_legendre_rule(1)
    assert np.allclose(r.points, [0.0]) and np.allclose(r.weights, [2.0])


def test_two_point_rule():
    r = gauss_legendre_rule(2)
    assert np.allclose(r.points, [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=0, atol=1e-15)
    assert np.allclose(r.weights, [1.0, 1.0], rtol=0, atol=1e-15)


def test_five_point_t8():
    assert gauss_legendre_rule(5).integrate(lambda t: t ** 8) == pytest.approx(2 / 9, abs=1e-14)


@pytest.mark.parametrize("n", range(1, 11))
def test_rule_invariants(n):
    r = gauss_legendre_rule(n)
    assert abs(r.weights.sum() - 2.0) <= 2e-14
    assert np.all(r.weights > 0) and np.all(np.abs(r.points) < 1)
    assert np.array_equal(r.points, -r.points[::-1])
    for j in range(2 * n):
        exact = 0.0 if j % 2 else 2.0 / (j + 1)
        assert r.integrate(lambda t: t ** j) == pytest.approx(exact, abs=1e-13)


@pytest.mark.parametrize("n", [0, 11, -3])
def test_rule_rejects(n):
    with pytest.raises(ValueError):
        gauss_legendre_rule(n)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=10, max_size=10))
def test_degree9_exactness(coeffs):
    p = np.polynomial.Polynomial(coeffs)
    exact = p.integ()(1.0) - p.integ()(-1.0)
    assert abs(gauss_legendre_rule(5).integrate(p) - exact) <= 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cardinality_and_partition(k):
    b = local_basis(k)
    assert np.allclose(b.values(b.nodes), np.eye(k + 1), atol=1e-14)
    t = np.linspace(-1, 1, 37)
    assert np.allclose(b.values(t).sum(axis=1), 1.0, atol=1e-14)
    assert np.allclose(b.derivatives(t).sum(axis=1), 0.0, atol=1e-13)


def test_lobatto_nodes():
    assert np.allclose(lobatto_nodes(3), [-1, -1 / math.sqrt(5), 1 / math.sqrt(5), 1])
    with pytest.raises(ValueError):
        lobatto_nodes(4)


def test_linear_hat():
    b = local_basis(1)
    for t in (-1.0, -0.3, 0.0, 0.7, 1.0):
        v, d = basis_eval(b, 0, t)
        assert v == pytest.approx((1 - t) / 2) and d == pytest.approx(-0.5)


def test_basis_index_range():
    with pytest.raises(IndexError):
        basis_eval(local_basis(2), 3, 0.0)


@pytest.mark.parametrize("k,bound", [(1, 1.0), (2, 1.25), (3, 1.5)])
def test_lebesgue_sum(k, bound):
    # exact Lebesgue constants of the Gauss-Lobatto node sets
    t = np.linspace(-1, 1, 1000)
    s = np.abs(local_basis(k).values(t)).sum(axis=1)
    assert s.max() <= bound + 1e-12


def _space(k, N=8):
    return DGSpace(build_stype_mesh(MeshVariant("BS"), N, 2.0 ** -6), k)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_constant_function(k):
    sp = _space(k)
    fn = sp.function(np.ones(sp.ndofs))
    for x, side in ((0.0, RIGHT), (0.013, RIGHT), (0.5, LEFT), (0.5, RIGHT), (0.77, RIGHT), (1.0, LEFT)):
        v, d = dg_eval(fn, x, side)
        assert v == pytest.approx(1.0) and d == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_linear_reproduction(k):
    sp = _space(k)
    fn = sp.function(sp.dof_points().ravel())
    for x in np.linspace(0, 1, 23):
        v, d = dg_eval(fn, x, RIGHT if x < 1 else LEFT)
        assert v == pytest.approx(x, abs=1e-14) and d == pytest.approx(1.0, rel=1e-8)


def test_discontinuous_traces():
    sp = DGSpace(uniform_mesh(4), 1)
    c = np.zeros(sp.ndofs)
    c[4:] = 1.0  # zero on the first two cells, one on the rest
    fn = sp.function(c)
    assert dg_eval(fn, 0.5, LEFT)[0] == 0.0
    assert dg_eval(fn, 0.5, RIGHT)[0] == 1.0
    with pytest.raises(ValueError):
        dg_eval(fn, 0.5)
    with pytest.raises(ValueError):
        dg_eval(fn, 0.0, LEFT)
    with pytest.raises(ValueError):
        dg_eval(fn, 1.0, RIGHT)
    with pytest.raises(ValueError):
        dg_eval(fn, 1.5)


def test_coefficient_count_checked():
    sp = DGSpace(uniform_mesh(4), 2)
    with pytest.raises(ValueError):
        sp.function(np.zeros(5))
    with pytest.raises(ValueError):
        DGSpace(uniform_mesh(4), 4)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_derivative_matches_finite_difference(k):
    rng = np.random.default_rng(7)
    sp = DGSpace(uniform_mesh(8), k)
    fn = sp.function(rng.uniform(-1, 1, sp.ndofs))
    nodes = sp.mesh.nodes
    xs = rng.uniform(0, 1, 100)
    for x in xs:
        e = min(np.searchsorted(nodes, x) - 1, 7)
        hstep = 1e-6 * (nodes[e + 1] - nodes[e])
        x = float(np.clip(x, nodes[e] + 2 * hstep, nodes[e + 1] - 2 * hstep))
        fd = (dg_eval(fn, x + hstep)[0] - dg_eval(fn, x - hstep)[0]) / (2 * hstep)
        d = dg_eval(fn, x)[1]
        assert fd == pytest.approx(d, rel=1e-6, abs=1e-6)
