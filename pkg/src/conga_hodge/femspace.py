"""Broken finite element fields and their geometric degrees of freedom.

A level-l broken field is a coefficient vector over the level-l multi-index
enumeration of a grid; the coefficients are the geometric degrees of freedom
(point values at subgrid nodes for l=0, tangential subedge integrals for
l=1, subcell integrals for l=2) and the associated basis is dual to them, so
interpolation of a smooth function is simply the evaluation of its DoFs.

All integrals (DoFs, moment vectors, L2 errors) use the composite
Gauss-Legendre rule of the 1D basis, which integrates every product of basis
polynomials exactly.
"""

import json
from dataclasses import dataclass

import numpy as np

__all__ = ['BrokenField', 'SmoothFunction', 'geometric_dofs', 'eval_field',
           'moment_vector', 'l2_project', 'l2_error', 'relative_l2_error']


@dataclass
class BrokenField:
    """Coefficient vector of one broken space level over a grid."""

    level: int
    coeffs: np.ndarray
    grid: object

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        n = self.grid.n_dofs(self.level)
        if self.coeffs.shape != (n,):
            raise ValueError(
                f'level-{self.level} field needs {n} coefficients, '
                f'got shape {self.coeffs.shape}')

    def copy(self):
        return BrokenField(self.level, self.coeffs.copy(), self.grid)

    def to_json(self):
        spec = self.grid.spec
        return json.dumps({
            'header': {'level': self.level, 'K': spec.K, 'p': spec.p,
                       'a': spec.a, 'mask_hash': spec.content_hash()},
            'coeffs': self.coeffs.tolist()})

    @classmethod
    def from_json(cls, doc, grid):
        data = json.loads(doc) if isinstance(doc, str) else doc
        hdr = data['header']
        spec = grid.spec
        if hdr['mask_hash'] != spec.content_hash():
            raise ValueError(
                f"field header hash {hdr['mask_hash']} does not match "
                f'the grid ({spec.content_hash()})')
        return cls(hdr['level'], np.array(data['coeffs']), grid)


@dataclass
class SmoothFunction:
    """A callable field on the domain: scalar for levels 0 and 2, 2-vector
    for level 1 (the callable returns a (f1, f2) pair).  Callables must
    accept numpy arrays."""

    level: int
    fn: object

    def __call__(self, x1, x2):
        return self.fn(x1, x2)


def zero_function(level):
    if level == 1:
        return SmoothFunction(1, lambda x1, x2: (np.zeros_like(x1),
                                                 np.zeros_like(x1)))
    return SmoothFunction(level, lambda x1, x2: np.zeros_like(x1))


def _edge_rule(grid, basis, k, j):
    """Physical quadrature nodes/weights on subinterval j of interval I_k."""
    h = grid.h
    x = h * (k - 1) + h * basis.quad_nodes[j]
    w = h * basis.quad_weights[j]
    return x, w


def geometric_dofs(level, f, grid, basis):
    """Interpolate a smooth function through its geometric DoFs.

    Parameters
    ----------
    level : int
    f : SmoothFunction or callable
        Scalar callable for levels 0 and 2; for level 1 a callable returning
        the pair (f1, f2).
    grid : Grid
    basis : Basis1D

    Returns
    -------
    BrokenField
    """
    if isinstance(f, BrokenField):
        # restriction to the owning cell, as the DoF definition requires
        return _geometric_dofs_of_field(level, f, grid, basis)
    fn = f.fn if isinstance(f, SmoothFunction) else f
    zeta = grid.zeta
    coeffs = np.empty(grid.n_dofs(level))
    if level == 0:
        for pos, ((k1, k2), (i1, i2)) in enumerate(grid.indices[0]):
            coeffs[pos] = fn(zeta[k1 - 1, i1], zeta[k2 - 1, i2])
    elif level == 1:
        for pos, ((k1, k2), d, (i1, i2)) in enumerate(grid.indices[1]):
            if d == 1:
                x, w = _edge_rule(grid, basis, k1, i1)
                y = np.full_like(x, zeta[k2 - 1, i2])
                coeffs[pos] = w @ fn(x, y)[0]
            else:
                y, w = _edge_rule(grid, basis, k2, i2)
                x = np.full_like(y, zeta[k1 - 1, i1])
                coeffs[pos] = w @ fn(x, y)[1]
    elif level == 2:
        for pos, ((k1, k2), (i1, i2)) in enumerate(grid.indices[2]):
            x, wx = _edge_rule(grid, basis, k1, i1)
            y, wy = _edge_rule(grid, basis, k2, i2)
            X, Y = np.meshgrid(x, y, indexing='ij')
            coeffs[pos] = wx @ fn(X, Y) @ wy
    else:
        raise ValueError(f'level must be 0, 1 or 2, got {level}')
    return BrokenField(level, coeffs, grid)


def _geometric_dofs_of_field(level, fld, grid, basis):
    """DoFs of a broken field, evaluating each one on the cell that owns it."""
    zeta = grid.zeta
    coeffs = np.empty(grid.n_dofs(level))
    if level == 0:
        for pos, (k, (i1, i2)) in enumerate(grid.indices[0]):
            coeffs[pos] = eval_field(
                fld, zeta[k[0] - 1, i1], zeta[k[1] - 1, i2], k)
    elif level == 1:
        for pos, (k, d, (i1, i2)) in enumerate(grid.indices[1]):
            if d == 1:
                x, w = _edge_rule(grid, basis, k[0], i1)
                y = np.full_like(x, zeta[k[1] - 1, i2])
            else:
                y, w = _edge_rule(grid, basis, k[1], i2)
                x = np.full_like(y, zeta[k[0] - 1, i1])
            coeffs[pos] = w @ eval_field(fld, x, y, k)[d - 1]
    elif level == 2:
        for pos, (k, (i1, i2)) in enumerate(grid.indices[2]):
            x, wx = _edge_rule(grid, basis, k[0], i1)
            y, wy = _edge_rule(grid, basis, k[1], i2)
            X, Y = np.meshgrid(x, y, indexing='ij')
            coeffs[pos] = wx @ eval_field(fld, X, Y, k) @ wy
    else:
        raise ValueError(f'level must be 0, 1 or 2, got {level}')
    return BrokenField(level, coeffs, grid)


def eval_field(v, x1, x2, cell):
    """Evaluate a broken field at points inside (the closure of) one cell.

    The cell must be given explicitly: broken fields are two-valued on
    interfaces and no averaging is done here.

    Parameters
    ----------
    v : BrokenField
    x1, x2 : float or ndarray
        Point coordinates, inside the closed cell.
    cell : (int, int)
        The 1-based cell index (k1, k2) whose local polynomial is evaluated.

    Returns
    -------
    Value array, or a (value1, value2) pair for level 1.
    """
    grid = v.grid
    k1, k2 = cell
    h = grid.h
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    t1 = (x1 - h * (k1 - 1)) / h
    t2 = (x2 - h * (k2 - 1)) / h
    eps = 1e-12
    if np.any(t1 < -eps) or np.any(t1 > 1 + eps) or \
       np.any(t2 < -eps) or np.any(t2 > 1 + eps):
        raise ValueError(f'point outside cell {cell}')
    basis = _basis_of(v)
    p = grid.p
    phi1 = basis.lagrange_all(np.clip(t1, 0.0, 1.0))
    phi2 = basis.lagrange_all(np.clip(t2, 0.0, 1.0))
    psi1 = basis.histopolation_all(np.clip(t1, 0.0, 1.0)) / h
    psi2 = basis.histopolation_all(np.clip(t2, 0.0, 1.0)) / h

    if v.level == 0:
        base = grid.index_of[0][((k1, k2), (0, 0))]
        c = v.coeffs[base:base + (p + 1) ** 2].reshape(p + 1, p + 1)
        return np.einsum('ij,i...,j...->...', c, phi1, phi2)
    if v.level == 1:
        base = grid.index_of[1][((k1, k2), 1, (0, 0))]
        c1 = v.coeffs[base:base + p * (p + 1)].reshape(p, p + 1)
        base = grid.index_of[1][((k1, k2), 2, (0, 0))]
        c2 = v.coeffs[base:base + p * (p + 1)].reshape(p + 1, p)
        val1 = np.einsum('ij,i...,j...->...', c1, psi1, phi2)
        val2 = np.einsum('ij,i...,j...->...', c2, phi1, psi2)
        return val1, val2
    if v.level == 2:
        base = grid.index_of[2][((k1, k2), (0, 0))]
        c = v.coeffs[base:base + p * p].reshape(p, p)
        return np.einsum('ij,i...,j...->...', c, psi1, psi2)
    raise ValueError(f'level must be 0, 1 or 2, got {v.level}')


def _basis_of(v):
    # fields carry no basis; rebuild the cheap 1D object on demand and cache
    # it on the grid
    grid = v.grid
    if not hasattr(grid, '_basis1d'):
        from .basis1d import Basis1D
        grid._basis1d = Basis1D(grid.p)
    return grid._basis1d


def _cell_quadrature(grid, basis, k1, k2):
    """Full tensor quadrature over one cell: physical points and weights."""
    h = grid.h
    x = h * (k1 - 1) + h * basis.quad_nodes.ravel()
    y = h * (k2 - 1) + h * basis.quad_nodes.ravel()
    w = h * basis.quad_weights.ravel()
    return x, y, w


def moment_vector(level, f, grid, basis):
    """Vector of moments b_mu = <f, Lambda_mu> over the broken basis.

    This is the load vector of the L2 projection and of the source problems.
    """
    fn = f.fn if isinstance(f, SmoothFunction) else f
    p = grid.p
    nq = basis.quad_nodes.size
    phi = basis.lagrange_all(basis.quad_nodes.ravel())        # (p+1, nq)
    psi = basis.histopolation_all(basis.quad_nodes.ravel())   # (p, nq)
    b = np.empty(grid.n_dofs(level))
    for (k1, k2) in grid.cells:
        x, y, w = _cell_quadrature(grid, basis, k1, k2)
        X, Y = np.meshgrid(x, y, indexing='ij')
        if level == 0:
            F = fn(X, Y) * np.outer(w, w)
            blk = np.einsum('iq,jr,qr->ij', phi, phi, F)
            base = grid.index_of[0][((k1, k2), (0, 0))]
            b[base:base + (p + 1) ** 2] = blk.ravel()
        elif level == 1:
            F1, F2 = fn(X, Y)
            W = np.outer(w, w)
            # physical psi carries 1/h
            blk1 = np.einsum('iq,jr,qr->ij', psi / grid.h, phi, F1 * W)
            blk2 = np.einsum('iq,jr,qr->ij', phi, psi / grid.h, F2 * W)
            base = grid.index_of[1][((k1, k2), 1, (0, 0))]
            b[base:base + p * (p + 1)] = blk1.ravel()
            base = grid.index_of[1][((k1, k2), 2, (0, 0))]
            b[base:base + p * (p + 1)] = blk2.ravel()
        elif level == 2:
            F = fn(X, Y) * np.outer(w, w)
            blk = np.einsum('iq,jr,qr->ij', psi / grid.h, psi / grid.h, F)
            base = grid.index_of[2][((k1, k2), (0, 0))]
            b[base:base + p * p] = blk.ravel()
        else:
            raise ValueError(f'level must be 0, 1 or 2, got {level}')
    return b


def l2_project(level, f, ops):
    """L2 projection of a smooth function onto the broken space.

    Solves M c = b with b the moment vector; the mass matrix is
    cell-block-diagonal so the solve reuses one Cholesky factor per level.
    """
    grid, basis = ops.grid, ops.basis
    b = moment_vector(level, f, grid, basis)
    return BrokenField(level, ops.mass_solve(level, b), grid)


def l2_error(level, v, f, grid=None, basis=None):
    """L2 norm of (v - f) over the active region.

    ``v`` may be None (or a zero field) to get the norm of f itself.
    """
    if grid is None:
        grid = v.grid
    if basis is None:
        from .basis1d import Basis1D
        basis = Basis1D(grid.p)
    fn = f.fn if isinstance(f, SmoothFunction) else f
    level = level if v is None else v.level
    acc = 0.0
    for (k1, k2) in grid.cells:
        x, y, w = _cell_quadrature(grid, basis, k1, k2)
        X, Y = np.meshgrid(x, y, indexing='ij')
        W = np.outer(w, w)
        if level == 1:
            F1, F2 = fn(X, Y)
            if v is not None:
                V1, V2 = eval_field(v, X, Y, (k1, k2))
                F1, F2 = V1 - F1, V2 - F2
            acc += float((W * (F1 ** 2 + F2 ** 2)).sum())
        else:
            F = fn(X, Y)
            if v is not None:
                F = eval_field(v, X, Y, (k1, k2)) - F
            acc += float((W * F ** 2).sum())
    return np.sqrt(acc)


def relative_l2_error(level, v, f, grid=None, basis=None):
    """Relative L2 error ||v - f|| / ||f||.

    Returns (value, absolute_fallback): when ||f|| is below 1e-14 the
    division is not meaningful and the absolute error is returned with the
    flag set.
    """
    if grid is None:
        grid = v.grid
    err = l2_error(level, v, f, grid, basis)
    ref = l2_error(level, None, f, grid, basis)
    if ref < 1e-14:
        return err, True
    return err / ref, False
