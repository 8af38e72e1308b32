import numpy as np
import pytest

from conga_hodge.conga import harmonic_basis, strong_alpha
from conga_hodge.femspace import relative_l2_error
from conga_hodge.harness import CASES
from conga_hodge.solve import (EigenReport, ResonanceError, eig_hodge,
                               exact_eigenvalues, match_eigenvalues,
                               solve_helmholtz, solve_helmholtz_conforming,
                               solve_source_mixed)


def helmholtz_case(omega=3.5):
    return CASES['helmholtz-w3.5'].build(omega)


def test_exact_eigenvalues_head():
    want = [0.25, 0.25, 0.5, 0.5, 1.0, 1.0,
            1.25, 1.25, 1.25, 1.25, 2.0, 2.0]
    assert np.allclose(exact_eigenvalues(12), want)
    # scalar Dirichlet Laplacian needs both indices positive
    assert np.allclose(exact_eigenvalues(6, level=0),
                       [0.5, 1.25, 1.25, 2.0, 2.5, 2.5])


def test_exact_eigenvalues_rejects_other_domains():
    with pytest.raises(ValueError):
        exact_eigenvalues(10, a=1.0)
    with pytest.raises(ValueError):
        exact_eigenvalues(10, level=2)


def test_match_eigenvalues():
    err, spurious = match_eigenvalues([0.25, 0.5, 1.2], [0.25, 0.5, 1.0])
    assert np.allclose(err, [0.0, 0.0, 0.2])
    assert list(spurious) == [False, False, False]
    _, spurious = match_eigenvalues([0.25, 0.8], [0.25, 0.5])
    assert list(spurious) == [False, True]
    with pytest.raises(ValueError):
        match_eigenvalues([0.25], [0.25, 0.5])


def test_mixed_solver_argument_checks(ops_k3p2):
    f, _ = helmholtz_case()
    with pytest.raises(ValueError):
        solve_source_mixed(0, f, ops_k3p2, 1.0)
    with pytest.raises(ValueError):
        solve_source_mixed(1, f, ops_k3p2, 0.0)


def test_mixed_solver_jump_scaling(ops_k4p2):
    """The filtered jump norm scales exactly like 1/alpha; the product is a
    frozen regression value for this grid and source."""
    f, _ = helmholtz_case()
    products = []
    for al in (1.0, 10.0, 100.0):
        sol = solve_source_mixed(1, f, ops_k4p2, al, filtered=True)
        assert sol.diagnostics['residual'] < 1e-12
        assert sol.diagnostics['filtered'] is True
        products.append(sol.diagnostics['jump_norm'] * al)
    assert np.allclose(products, 2.00281487738866, rtol=1e-9)


def test_mixed_solver_unfiltered_jump_larger(ops_k4p2):
    f, _ = helmholtz_case()
    fil = solve_source_mixed(1, f, ops_k4p2, 10.0, filtered=True)
    raw = solve_source_mixed(1, f, ops_k4p2, 10.0, filtered=False)
    assert raw.diagnostics['filtered'] is False
    assert raw.diagnostics['jump_norm'] > fil.diagnostics['jump_norm']


def test_mixed_solver_harmonic_constraint(ops_annulus_k3p2):
    ops = ops_annulus_k3p2
    f, _ = helmholtz_case()
    harm = harmonic_basis(1, ops)
    sol = solve_source_mixed(1, f, ops, 5.0, harmonic=harm)
    assert sol.p.shape == (1,)
    Pu = ops.projection(1) @ sol.u.coeffs
    q = harm[0]
    assert abs(float(Pu @ (ops.mass(1).mat @ q.coeffs))) < 1e-10


def test_helmholtz_accepts_moment_vector(ops_k3p2):
    from conga_hodge.femspace import moment_vector
    f, _ = helmholtz_case()
    b = moment_vector(1, f, ops_k3p2.grid, ops_k3p2.basis)
    al = strong_alpha(2, ops_k3p2.grid.h)
    s1 = solve_helmholtz(3.5, f, ops_k3p2, al)
    s2 = solve_helmholtz(3.5, b, ops_k3p2, al)
    assert np.allclose(s1.u.coeffs, s2.u.coeffs, atol=1e-13)


def test_helmholtz_solves_manufactured_case(ops_k4p2):
    f, u = helmholtz_case()
    al = strong_alpha(2, ops_k4p2.grid.h)
    sol = solve_helmholtz(3.5, f, ops_k4p2, al)
    rel, is_abs = relative_l2_error(1, sol.u, u)
    assert not is_abs
    assert rel < 0.35
    assert sol.diagnostics['residual'] < 1e-10
    assert sol.diagnostics['rcond_est'] > 1e-12


def test_helmholtz_zero_alpha_is_allowed(ops_k3p2):
    f, u = helmholtz_case()
    sol = solve_helmholtz(3.5, f, ops_k3p2, 0.0)
    rel, _ = relative_l2_error(1, sol.u, u)
    assert rel < 1.0


def test_helmholtz_resonance_guard(ops_k3p2):
    # placing omega^2 exactly on a discrete eigenvalue must trip the
    # condition estimate
    al = strong_alpha(2, ops_k3p2.grid.h)
    rep = eig_hodge(1, ops_k3p2, al)
    lam = rep.nonzero_eigenvalues()[4]
    f, _ = helmholtz_case()
    with pytest.raises(ResonanceError):
        solve_helmholtz(np.sqrt(lam), f, ops_k3p2, al)


def test_conforming_solver_returns_conforming_field(ops_k4p2):
    f, u = helmholtz_case()
    sol = solve_helmholtz_conforming(3.5, f, ops_k4p2)
    P = ops_k4p2.projection(1)
    assert np.abs(sol.u.coeffs - P @ sol.u.coeffs).max() == 0.0
    rel, _ = relative_l2_error(1, sol.u, u)
    assert rel < 0.35
    assert sol.diagnostics['method'] == 'conforming'


def test_broken_and_conforming_errors_comparable(ops_k4p2):
    f, u = helmholtz_case()
    al = strong_alpha(2, ops_k4p2.grid.h)
    broken = solve_helmholtz(3.5, f, ops_k4p2, al)
    conf = solve_helmholtz_conforming(3.5, f, ops_k4p2)
    rb, _ = relative_l2_error(1, broken.u, u)
    rc, _ = relative_l2_error(1, conf.u, u)
    assert 0.3 < rb / rc < 3.0


def test_eigen_report_interface(ops_k3p2):
    rep = eig_hodge(1, ops_k3p2, 0.0)
    assert isinstance(rep, EigenReport)
    assert rep.alpha == 0.0
    n_zero = int(rep.near_zero().sum())
    assert n_zero > 0
    nz = rep.nonzero_eigenvalues()
    assert len(nz) + n_zero == len(rep.eigenvalues)
    assert np.all(np.diff(rep.eigenvalues) >= 0)
    with pytest.raises(ValueError):
        rep.smallest_nonzero(len(nz) + 1)


def test_eigenvalues_approximate_exact_spectrum(ops_k4p2):
    rep = eig_hodge(1, ops_k4p2, strong_alpha(2, ops_k4p2.grid.h))
    vals = rep.smallest_nonzero(10)
    exact = exact_eigenvalues(10)
    err, spurious = match_eigenvalues(vals, exact)
    assert not spurious.any()
    assert (err / exact).max() < 0.05
