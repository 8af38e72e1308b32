"""Sparse matrices of the broken complex.

Three families are assembled here, all block-structured over cells:

* differential matrices D0, D1: signed incidence matrices of the subgrid
  connectivity (entries in {-1, 0, +1}, exact integers), with D1 @ D0 = 0;
* mass matrices M0, M1, M2: per-cell Kronecker products of the 1D node and
  edge masses on length-h intervals (N_h = h N, E_h = E / h);
* conforming projections P0, P1, P2: DoF averaging over coincident geometric
  elements, with boundary rows and columns zeroed when homogeneous boundary
  conditions are requested (P2 is always the identity, since subcells are
  never shared and carry no boundary condition).

Every matrix is wrapped in a :class:`SparseOperator` carrying source/target
space tags; products check the tags so that dimension mismatches fail at
construction time instead of producing silently wrong matrices.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.io import mmwrite, mmread
from scipy.linalg import cho_factor, cho_solve

from .basis1d import Basis1D
from .grid import build_grid

__all__ = ['SparseOperator', 'ComplexOperators', 'assemble_diff',
           'assemble_mass', 'assemble_projection', 'conforming_dimension',
           'conforming_basis', 'export_matrix_market', 'import_matrix_market']


class SparseOperator:
    """A sparse matrix with source and target space tags.

    The tags name the space level of the columns (source) and rows (target),
    e.g. 'V1'.  Products via @ check compatibility and propagate tags.
    """

    def __init__(self, mat, row_space, col_space):
        mat = mat.tocsr() if sps.issparse(mat) else sps.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        self.mat = mat
        self.row_space = row_space
        self.col_space = col_space

    @property
    def shape(self):
        return self.mat.shape

    @property
    def T(self):
        return SparseOperator(self.mat.T, self.col_space, self.row_space)

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            if self.col_space != other.row_space:
                raise ValueError(
                    f'operator mismatch: {self.col_space} @ {other.row_space} '
                    f'({self.row_space}<-{self.col_space} applied to '
                    f'{other.row_space}<-{other.col_space})')
            return SparseOperator(self.mat @ other.mat,
                                  self.row_space, other.col_space)
        return self.mat @ other

    def __rmatmul__(self, other):
        return other @ self.mat

    def __add__(self, other):
        o = other.mat if isinstance(other, SparseOperator) else other
        if isinstance(other, SparseOperator) and \
                (self.row_space, self.col_space) != (other.row_space, other.col_space):
            raise ValueError('cannot add operators with different space tags')
        return SparseOperator(self.mat + o, self.row_space, self.col_space)

    def __sub__(self, other):
        o = other.mat if isinstance(other, SparseOperator) else other
        if isinstance(other, SparseOperator) and \
                (self.row_space, self.col_space) != (other.row_space, other.col_space):
            raise ValueError('cannot subtract operators with different space tags')
        return SparseOperator(self.mat - o, self.row_space, self.col_space)

    def __mul__(self, scalar):
        return SparseOperator(self.mat * scalar, self.row_space, self.col_space)

    __rmul__ = __mul__

    def toarray(self):
        return self.mat.toarray()


def assemble_diff(level, grid, debug_flip_sign=False):
    """Differential incidence matrix D^level (level in {0, 1}).

    D0 maps node values to tangential edge increments: the row of edge
    (k, d, i) holds +1 at node (k, i + u_d) and -1 at node (k, i).  D1 maps
    edge circulations to subcell curl integrals, with the sign convention of
    curl v = d1 v2 - d2 v1: the row of subcell (k, i) holds +1 at edge
    (k, 2, (i1+1, i2)), -1 at edge (k, 2, i), -1 at edge (k, 1, (i1, i2+1)),
    +1 at edge (k, 1, i).

    ``debug_flip_sign`` negates the d=1 entries of D1; it exists only so the
    verification suite can prove that the complex and Stokes checks actually
    fail on a wrong sign.
    """
    rows, cols, vals = [], [], []
    if level == 0:
        for pos, (k, d, (i1, i2)) in enumerate(grid.indices[1]):
            up = (i1 + 1, i2) if d == 1 else (i1, i2 + 1)
            rows.append(pos)
            cols.append(grid.index_of[0][(k, up)])
            vals.append(1)
            rows.append(pos)
            cols.append(grid.index_of[0][(k, (i1, i2))])
            vals.append(-1)
        shape = (grid.n_dofs(1), grid.n_dofs(0))
        tags = ('V1', 'V0')
    elif level == 1:
        s = -1 if debug_flip_sign else 1
        for pos, (k, (i1, i2)) in enumerate(grid.indices[2]):
            entries = [
                (grid.index_of[1][(k, 2, (i1 + 1, i2))], 1),
                (grid.index_of[1][(k, 2, (i1, i2))], -1),
                (grid.index_of[1][(k, 1, (i1, i2 + 1))], -s),
                (grid.index_of[1][(k, 1, (i1, i2))], s),
            ]
            for col, val in entries:
                rows.append(pos)
                cols.append(col)
                vals.append(val)
        shape = (grid.n_dofs(2), grid.n_dofs(1))
        tags = ('V2', 'V1')
    else:
        raise ValueError(f'differential level must be 0 or 1, got {level}')
    mat = sps.coo_matrix((np.array(vals, dtype=np.int64), (rows, cols)),
                         shape=shape)
    return SparseOperator(mat, *tags)


def _cell_mass_block(level, basis, h):
    """Dense mass block of one cell (identical for all cells)."""
    N = h * basis.node_mass
    E = basis.edge_mass / h
    if level == 0:
        return np.kron(N, N)
    if level == 1:
        from scipy.linalg import block_diag
        return block_diag(np.kron(E, N), np.kron(N, E))
    if level == 2:
        return np.kron(E, E)
    raise ValueError(f'level must be 0, 1 or 2, got {level}')


def assemble_mass(level, grid, basis):
    """Block-diagonal mass matrix of one broken space level."""
    block = _cell_mass_block(level, basis, grid.h)
    mat = sps.block_diag([sps.csr_matrix(block)] * grid.n_cells, format='csr')
    return SparseOperator(mat, f'V{level}', f'V{level}')


def assemble_projection(level, grid, homogeneous_bc=True):
    """Conforming projection matrix P^level.

    P_{mu,nu} = 1 / #M(g_nu) when g_mu = g_nu and 0 otherwise; with
    ``homogeneous_bc`` (the default) the rows and columns of boundary
    multi-indices are zeroed, which folds the boundary conditions of the
    conforming spaces into the projection.  Since all multi-indices of one
    geometric element are either all boundary or all interior, this just
    drops the boundary groups.
    """
    groups = {}
    for pos, mu in enumerate(grid.indices[level]):
        groups.setdefault(grid.geom_identity(level, mu), []).append(pos)
    rows, cols, vals = [], [], []
    for g, members in groups.items():
        if homogeneous_bc and grid.on_boundary(g):
            continue
        w = 1.0 / len(members)
        for r in members:
            for c in members:
                rows.append(r)
                cols.append(c)
                vals.append(w)
    n = grid.n_dofs(level)
    mat = sps.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return SparseOperator(mat, f'V{level}', f'V{level}')


def conforming_dimension(level, grid):
    """dim of the conforming subspace = number of interior elements."""
    return grid.conforming_size(level)


def conforming_basis(level, grid, homogeneous_bc=True):
    """Basis matrix C of the conforming subspace in broken coefficients.

    Column j is the coefficient vector of the stitched basis function of the
    j-th interior geometric element: ones on all multi-indices sharing it.
    Satisfies P C = C and Im C = Im P.
    """
    groups = {}
    for pos, mu in enumerate(grid.indices[level]):
        groups.setdefault(grid.geom_identity(level, mu), []).append(pos)
    rows, cols = [], []
    j = 0
    for g in grid.elements(level):
        if homogeneous_bc and grid.on_boundary(g):
            continue
        for r in groups[g]:
            rows.append(r)
            cols.append(j)
        j += 1
    mat = sps.coo_matrix((np.ones(len(rows)), (rows, cols)),
                         shape=(grid.n_dofs(level), j))
    return SparseOperator(mat, f'V{level}', f'V{level}c')


@dataclass
class ComplexOperators:
    """Operator bundle of one grid + degree: differentials, masses,
    projections, and the per-cell mass factorizations."""

    grid: object
    basis: object
    D0: SparseOperator
    D1: SparseOperator
    M0: SparseOperator
    M1: SparseOperator
    M2: SparseOperator
    P0: SparseOperator
    P1: SparseOperator
    P2: SparseOperator
    _mass_cho: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, spec, homogeneous_bc=True):
        """Assemble all operators for a GridSpec (or prebuilt Grid)."""
        grid = spec if hasattr(spec, 'indices') else build_grid(spec)
        basis = Basis1D(grid.p)
        return cls(
            grid=grid, basis=basis,
            D0=assemble_diff(0, grid),
            D1=assemble_diff(1, grid),
            M0=assemble_mass(0, grid, basis),
            M1=assemble_mass(1, grid, basis),
            M2=assemble_mass(2, grid, basis),
            P0=assemble_projection(0, grid, homogeneous_bc),
            P1=assemble_projection(1, grid, homogeneous_bc),
            P2=assemble_projection(2, grid, homogeneous_bc),
        )

    def mass(self, level):
        return (self.M0, self.M1, self.M2)[level]

    def diff(self, level):
        return (self.D0, self.D1)[level]

    def projection(self, level):
        return (self.P0, self.P1, self.P2)[level]

    def _cell_cho(self, level):
        if level not in self._mass_cho:
            block = _cell_mass_block(level, self.basis, self.grid.h)
            self._mass_cho[level] = (cho_factor(block), block.shape[0])
        return self._mass_cho[level]

    def mass_solve(self, level, b):
        """Solve M^level x = b using the per-cell Cholesky factor."""
        cho, bs = self._cell_cho(level)
        b = np.asarray(b, dtype=float)
        x = np.empty_like(b)
        for c in range(self.grid.n_cells):
            x[c * bs:(c + 1) * bs] = cho_solve(cho, b[c * bs:(c + 1) * bs])
        return x

    def mass_inverse(self, level):
        """Block-diagonal inverse of M^level as a SparseOperator."""
        cho, bs = self._cell_cho(level)
        inv_block = cho_solve(cho, np.eye(bs))
        inv_block = 0.5 * (inv_block + inv_block.T)
        mat = sps.block_diag([sps.csr_matrix(inv_block)] * self.grid.n_cells,
                             format='csr')
        return SparseOperator(mat, f'V{level}', f'V{level}')

    def inner(self, level, u, v):
        """L2 (mass-weighted) inner product of two coefficient vectors."""
        return float(u @ (self.mass(level) @ v))

    def norm(self, level, u):
        return float(np.sqrt(max(self.inner(level, u, u), 0.0)))


def export_matrix_market(op, path, comment=''):
    """Write a SparseOperator to a Matrix Market coordinate file."""
    mmwrite(str(path), op.mat.tocoo(),
            comment=f'{op.row_space} <- {op.col_space} {comment}'.strip())


def import_matrix_market(path, row_space, col_space):
    """Read a Matrix Market file written by :func:`export_matrix_market`."""
    return SparseOperator(sps.csr_matrix(mmread(str(path))), row_space, col_space)
