"""Univariate Gauss-Lobatto machinery.

This module provides the 1D building blocks of the tensor-product spaces:
the Gauss-Lobatto nodes zeta_0 < ... < zeta_p of the reference interval
[0, 1], the Lagrange (interpolation) polynomials

    phi_i in P_p,      phi_i(zeta_j) = delta_ij,

the histopolation polynomials

    psi_i in P_{p-1},  int_{zeta_j}^{zeta_{j+1}} psi_i = delta_ij,

a composite Gauss-Legendre quadrature rule (one p+1 point Gauss rule per
Gauss-Lobatto subinterval, exact up to degree 2p+1 on each subinterval),
and the reference mass matrices

    N_ij = int_0^1 phi_i phi_j,    E_ij = int_0^1 psi_i psi_j.

The identity phi_i' = psi_{i-1} - psi_i (with psi_{-1} = psi_p = 0) is what
turns the discrete differential operators into signed incidence matrices;
``derivative_relation_check`` verifies it numerically.
"""

import numpy as np
from numpy.polynomial.legendre import Legendre, leggauss

__all__ = ['Basis1D', 'gauss_lobatto', 'quadrature', 'derivative_relation_check']


def _legendre_deriv_newton(p, x0, tol=1e-15, maxit=100):
    """Newton iteration for a root of P_p' on [-1, 1], starting from x0."""
    x = x0
    for _ in range(maxit):
        # evaluate P_p, P_p', P_p'' via the three-term recurrence
        P0, P1 = 1.0, x
        for n in range(1, p):
            P0, P1 = P1, ((2 * n + 1) * x * P1 - n * P0) / (n + 1)
        # P1 = P_p(x), P0 = P_{p-1}(x)
        dP = p * (x * P1 - P0) / (x * x - 1.0)
        ddP = (2.0 * x * dP - p * (p + 1) * P1) / (1.0 - x * x)
        dx = dP / ddP
        x -= dx
        if abs(dx) < tol:
            break
    return x


def gauss_lobatto(p):
    """Gauss-Lobatto points of degree p on the reference interval [0, 1].

    The p+1 points are the endpoints 0 and 1 together with the roots of the
    derivative of the Legendre polynomial P_p, affinely mapped from [-1, 1].
    Interior roots are found by Newton iteration with Chebyshev-Lobatto
    initial guesses.

    Parameters
    ----------
    p : int
        Polynomial degree, p >= 1.

    Returns
    -------
    ndarray
        Sorted array of p+1 points, nodes[0] == 0.0 and nodes[-1] == 1.0.
    """
    if p < 1:
        raise ValueError(f'degree must be >= 1, got {p}')
    nodes = np.empty(p + 1)
    nodes[0], nodes[-1] = -1.0, 1.0
    for j in range(1, p):
        x0 = -np.cos(np.pi * j / p)
        nodes[j] = _legendre_deriv_newton(p, x0)
    nodes.sort()
    # map [-1, 1] -> [0, 1]; keep the endpoints exact
    nodes = 0.5 * (nodes + 1.0)
    nodes[0], nodes[-1] = 0.0, 1.0
    return nodes


def quadrature(p):
    """Composite Gauss-Legendre rule on [0, 1], one rule per subinterval.

    Uses p+1 Gauss points on each of the p Gauss-Lobatto subintervals, so any
    polynomial of degree <= 2p+1 is integrated exactly on each subinterval;
    in particular all products of the basis polynomials (degree <= 2p) are
    covered.

    Parameters
    ----------
    p : int
        Polynomial degree, p >= 1.

    Returns
    -------
    nodes, weights : ndarray, shape (p, p+1)
        Row j holds the rule for the subinterval [zeta_j, zeta_{j+1}].
    """
    zeta = gauss_lobatto(p)
    gx, gw = leggauss(p + 1)
    nodes = np.empty((p, p + 1))
    weights = np.empty((p, p + 1))
    for j in range(p):
        half = 0.5 * (zeta[j + 1] - zeta[j])
        nodes[j] = zeta[j] + half * (gx + 1.0)
        weights[j] = half * gw
    return nodes, weights


class Basis1D:
    """Reference Lagrange / histopolation basis of degree p on [0, 1].

    Attributes
    ----------
    p : int
        Polynomial degree.
    ref_nodes : ndarray, shape (p+1,)
        Gauss-Lobatto points.
    quad_nodes, quad_weights : ndarray, shape (p, p+1)
        Composite Gauss-Legendre rule, one row per subinterval.
    node_mass : ndarray, shape (p+1, p+1)
        N_ij = int_0^1 phi_i phi_j.
    edge_mass : ndarray, shape (p, p)
        E_ij = int_0^1 psi_i psi_j.
    """

    def __init__(self, p):
        if p < 1:
            raise ValueError(f'degree must be >= 1, got {p}')
        self.p = p
        self.ref_nodes = gauss_lobatto(p)
        self.quad_nodes, self.quad_weights = quadrature(p)

        # barycentric weights for Lagrange evaluation
        z = self.ref_nodes
        w = np.ones(p + 1)
        for i in range(p + 1):
            for j in range(p + 1):
                if j != i:
                    w[i] /= z[i] - z[j]
        self._bary = w

        # histopolation polynomials: solve the moment system against a
        # Legendre basis on [0, 1].  A_jm = int_{zeta_j}^{zeta_{j+1}} L_m,
        # psi_i = sum_m c_mi L_m with A c = I.
        legs = [Legendre.basis(m, domain=[0.0, 1.0]) for m in range(p)]
        A = np.empty((p, p))
        for m, L in enumerate(legs):
            anti = L.integ()
            A[:, m] = anti(z[1:]) - anti(z[:-1])
        self._psi_coeffs = np.linalg.solve(A, np.eye(p))
        self._psi_legs = legs

        flat_x = self.quad_nodes.ravel()
        flat_w = self.quad_weights.ravel()
        phi_vals = self.lagrange_all(flat_x)                 # (p+1, n_quad)
        psi_vals = self.histopolation_all(flat_x)            # (p, n_quad)
        self.node_mass = (phi_vals * flat_w) @ phi_vals.T
        self.edge_mass = (psi_vals * flat_w) @ psi_vals.T

    def lagrange_eval(self, i, x):
        """Value of the Lagrange polynomial phi_i at x (scalar or array)."""
        if not 0 <= i <= self.p:
            raise ValueError(f'Lagrange index must be in [0, {self.p}], got {i}')
        return self.lagrange_all(x)[i]

    def lagrange_all(self, x):
        """Values of all phi_i at x; shape (p+1,) + shape(x)."""
        x = np.asarray(x, dtype=float)
        z = self.ref_nodes
        diff = x[np.newaxis, ...] - z.reshape((self.p + 1,) + (1,) * x.ndim)
        out = np.empty((self.p + 1,) + x.shape)
        with np.errstate(divide='ignore', invalid='ignore'):
            terms = self._bary.reshape((self.p + 1,) + (1,) * x.ndim) / diff
            denom = terms.sum(axis=0)
            out = terms / denom
        # exactly-on-node points: replace by the Kronecker column
        hit = np.isclose(diff, 0.0, rtol=0.0, atol=1e-15)
        if hit.any():
            anyhit = hit.any(axis=0)
            out[..., anyhit] = hit[..., anyhit].astype(float)
        return out

    def histopolation_eval(self, i, x):
        """Value of the histopolation polynomial psi_i at x."""
        if not 0 <= i <= self.p - 1:
            raise ValueError(
                f'histopolation index must be in [0, {self.p - 1}], got {i}')
        return self.histopolation_all(x)[i]

    def histopolation_all(self, x):
        """Values of all psi_i at x; shape (p,) + shape(x)."""
        x = np.asarray(x, dtype=float)
        leg_vals = np.stack([L(x) for L in self._psi_legs])
        return np.tensordot(self._psi_coeffs.T, leg_vals, axes=1)

    def lagrange_deriv_all(self, x):
        """Values of all phi_i' at x; shape (p+1,) + shape(x)."""
        x = np.asarray(x, dtype=float)
        z = self.ref_nodes
        out = np.empty((self.p + 1,) + x.shape)
        for i in range(self.p + 1):
            # d/dx prod_{j != i} (x - z_j)/(z_i - z_j), expanded as a sum
            acc = np.zeros_like(x)
            for m in range(self.p + 1):
                if m == i:
                    continue
                term = np.ones_like(x)
                for j in range(self.p + 1):
                    if j == i or j == m:
                        continue
                    term *= x - z[j]
                acc += term
            out[i] = self._bary[i] * acc
        return out

    def derivative_relation_check(self, n_samples=50, tol=1e-12):
        """Check phi_i' = psi_{i-1} - psi_i on a sample grid.

        Returns True when the maximal pointwise deviation over all i and all
        sample points is below tol.
        """
        x = np.linspace(0.0, 1.0, n_samples)
        dphi = self.lagrange_deriv_all(x)
        psi = self.histopolation_all(x)
        err = 0.0
        for i in range(self.p + 1):
            lhs = dphi[i]
            rhs = (psi[i - 1] if i >= 1 else 0.0) - (psi[i] if i < self.p else 0.0)
            err = max(err, np.max(np.abs(lhs - rhs)))
        return err < tol


def derivative_relation_check(p, n_samples=50, tol=1e-12):
    """Module-level convenience wrapper: build Basis1D(p) and run the check."""
    return Basis1D(p).derivative_relation_check(n_samples=n_samples, tol=tol)
