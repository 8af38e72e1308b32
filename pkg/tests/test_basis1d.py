import numpy as np
import pytest
from numpy.polynomial import legendre

from conga_hodge.basis1d import (Basis1D, derivative_relation_check,
                                 gauss_lobatto, quadrature)


def test_gauss_lobatto_endpoints_and_ordering():
    for p in range(1, 8):
        z = gauss_lobatto(p)
        assert z.shape == (p + 1,)
        assert z[0] == 0.0 and z[-1] == 1.0
        assert np.all(np.diff(z) > 0)


def test_gauss_lobatto_known_nodes():
    # closed forms for low degrees
    assert np.allclose(gauss_lobatto(1), [0.0, 1.0])
    assert np.allclose(gauss_lobatto(2), [0.0, 0.5, 1.0])
    s5 = 1.0 / np.sqrt(5.0)
    assert np.allclose(gauss_lobatto(3),
                       [0.0, 0.5 * (1 - s5), 0.5 * (1 + s5), 1.0],
                       atol=1e-14)
    s37 = np.sqrt(3.0 / 7.0)
    assert np.allclose(gauss_lobatto(4),
                       [0.0, 0.5 * (1 - s37), 0.5, 0.5 * (1 + s37), 1.0],
                       atol=1e-14)


@pytest.mark.parametrize('p', [2, 3, 4, 5, 6])
def test_gauss_lobatto_matches_legendre_derivative_roots(p):
    # independent oracle: interior nodes are the roots of P_p' on [-1, 1]
    c = np.zeros(p + 1)
    c[p] = 1.0
    roots = np.sort(legendre.legroots(legendre.legder(c)))
    ref = np.concatenate([[-1.0], roots, [1.0]])
    assert np.allclose(gauss_lobatto(p), 0.5 * (ref + 1.0), atol=1e-13)


def test_gauss_lobatto_rejects_degree_zero():
    with pytest.raises(ValueError):
        gauss_lobatto(0)


@pytest.mark.parametrize('p', [1, 2, 3, 4])
def test_quadrature_integrates_monomials_exactly(p):
    """The composite rule must integrate degree <= 2p+1 exactly on each
    subinterval, hence the monomials of those degrees on [0, 1]."""
    x, w = quadrature(p)
    assert x.shape == (p, p + 1)
    for q in range(2 * p + 2):
        assert abs((w * x ** q).sum() - 1.0 / (q + 1)) < 1e-14


def test_quadrature_weights_positive_and_local():
    z = gauss_lobatto(3)
    x, w = quadrature(3)
    assert np.all(w > 0)
    for j in range(3):
        assert np.all(x[j] > z[j]) and np.all(x[j] < z[j + 1])
        assert abs(w[j].sum() - (z[j + 1] - z[j])) < 1e-15


@pytest.mark.parametrize('p', [1, 2, 3, 5])
def test_lagrange_kronecker_property(p):
    b = Basis1D(p)
    vals = b.lagrange_all(b.ref_nodes)
    assert np.allclose(vals, np.eye(p + 1), atol=1e-13)


@pytest.mark.parametrize('p', [1, 2, 3, 5])
def test_lagrange_partition_of_unity(p):
    b = Basis1D(p)
    x = np.linspace(0.0, 1.0, 57)
    assert np.allclose(b.lagrange_all(x).sum(axis=0), 1.0, atol=1e-12)


@pytest.mark.parametrize('p', [1, 2, 3, 5])
def test_histopolation_moments(p):
    """int_{zeta_j}^{zeta_{j+1}} psi_i = delta_ij, checked with the
    composite rule (exact for degree p-1)."""
    b = Basis1D(p)
    moments = np.empty((p, p))
    for j in range(p):
        vals = b.histopolation_all(b.quad_nodes[j])
        moments[:, j] = vals @ b.quad_weights[j]
    assert np.allclose(moments, np.eye(p), atol=1e-13)


def test_histopolation_closed_forms():
    # p=1: the single psi is the constant 1
    b1 = Basis1D(1)
    x = np.linspace(0.0, 1.0, 11)
    assert np.allclose(b1.histopolation_all(x), 1.0, atol=1e-14)
    # p=2 (nodes 0, 1/2, 1): psi_0 = 3 - 4x and psi_1 = 4x - 1
    b2 = Basis1D(2)
    vals = b2.histopolation_all(x)
    assert np.allclose(vals[0], 3.0 - 4.0 * x, atol=1e-13)
    assert np.allclose(vals[1], 4.0 * x - 1.0, atol=1e-13)


def test_reference_mass_matrices():
    b1 = Basis1D(1)
    assert np.allclose(b1.node_mass,
                       [[1 / 3, 1 / 6], [1 / 6, 1 / 3]], atol=1e-15)
    b2 = Basis1D(2)
    assert np.allclose(b2.node_mass,
                       [[2 / 15, 1 / 15, -1 / 30],
                        [1 / 15, 8 / 15, 1 / 15],
                        [-1 / 30, 1 / 15, 2 / 15]], atol=1e-15)
    assert np.allclose(b2.edge_mass,
                       [[7 / 3, -1 / 3], [-1 / 3, 7 / 3]], atol=1e-14)


@pytest.mark.parametrize('p', [1, 2, 3, 4])
def test_mass_matrices_are_spd(p):
    b = Basis1D(p)
    for M in (b.node_mass, b.edge_mass):
        assert np.allclose(M, M.T, atol=1e-14)
        assert np.linalg.eigvalsh(M).min() > 0


@pytest.mark.parametrize('p', [1, 2, 3, 4, 5])
def test_derivative_relation(p):
    assert derivative_relation_check(p)


def test_eval_index_bounds():
    b = Basis1D(2)
    with pytest.raises(ValueError):
        b.lagrange_eval(3, 0.5)
    with pytest.raises(ValueError):
        b.histopolation_eval(2, 0.5)
    with pytest.raises(ValueError):
        Basis1D(0)
