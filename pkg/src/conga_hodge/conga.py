"""Projection-based differential operators and the penalized Hodge-Laplacian.

The broken complex uses differentials d_h = d P_h, realized as the matrix
products D^l P^l.  Their composition vanishes because the range of D0 P0 is
conforming and P1 fixes it.  On top of these the module builds:

* the symmetric stiffness S of the penalized Hodge-Laplacian, premultiplied
  by the mass matrix so that the eigenproblem is the symmetric pencil
  S x = lambda M x.  S splits into three PSD parts,

      A_div  = M (DP) M^{-1} (DP)^T M      (absent at level 0)
      J_pen  = (I - P)^T M (I - P)         (identically 0 at level 2)
      A_curl = (DP)^T M (DP)               (absent at level 2)

  where the inner mass inverse is applied per cell (block Cholesky);
* the discrete adjoint differentials d*_{l+1,h} = M^{-l} (D^l P^l)^T M^{l+1};
* harmonic fields (pencil nullspace) and the M-orthogonal Hodge-Helmholtz
  decomposition of a broken field into exact, harmonic, co-exact and jump
  components.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.linalg import eigh, lstsq

from .assembly import SparseOperator, conforming_basis
from .femspace import BrokenField

__all__ = ['HodgeOperator', 'HodgeDecomposition', 'conga_diff',
           'hodge_operator', 'harmonic_basis', 'hodge_decompose',
           'adjoint_apply', 'strong_alpha']


def strong_alpha(p, h):
    """The strong penalization policy 10 (p+1)^2 / h."""
    return 10.0 * (p + 1) ** 2 / h


def conga_diff(level, ops):
    """Matrix of the projection-based differential D^level P^level."""
    return ops.diff(level) @ ops.projection(level)


def _symmetrized(mat):
    return 0.5 * (mat + mat.T)


@dataclass
class HodgeOperator:
    """Symmetric pencil (S, M) of the penalized broken Hodge-Laplacian."""

    level: int
    S: SparseOperator
    M: SparseOperator
    alpha: float
    parts: dict


def hodge_operator(level, ops, alpha):
    """Assemble the stiffness/mass pencil of the Hodge-Laplacian at a level.

    ``alpha`` is the penalization weight of the nonconformity; it must be
    nonnegative.  At level 0 the divergence part is absent, at level 2 the
    curl part is absent and the penalization vanishes identically (P2 = I).
    """
    if alpha < 0:
        raise ValueError(f'penalization must be nonnegative, got {alpha}')
    M = ops.mass(level)
    n = M.shape[0]
    tag = f'V{level}'
    parts = {}

    if level >= 1:
        DP = conga_diff(level - 1, ops)
        X = ops.mass(level) @ DP                     # M^l D P
        A_div = X @ ops.mass_inverse(level - 1) @ X.T
        parts['A_div'] = SparseOperator(_symmetrized(A_div.mat), tag, tag)

    if level <= 1:
        DP = conga_diff(level, ops)
        A_curl = DP.T @ ops.mass(level + 1) @ DP
        parts['A_curl'] = SparseOperator(_symmetrized(A_curl.mat), tag, tag)

        P = ops.projection(level)
        ImP = SparseOperator(sps.eye(n, format='csr') - P.mat, tag, tag)
        J = ImP.T @ M @ ImP
        parts['J_pen'] = SparseOperator(_symmetrized(J.mat), tag, tag)

    S = sps.csr_matrix((n, n))
    if 'A_div' in parts:
        S = S + parts['A_div'].mat
    if 'J_pen' in parts:
        S = S + alpha * parts['J_pen'].mat
    if 'A_curl' in parts:
        S = S + parts['A_curl'].mat
    return HodgeOperator(level, SparseOperator(S, tag, tag), M, alpha, parts)


def harmonic_basis(level, ops, tol=1e-9, alpha=None):
    """M-orthonormal basis of the discrete harmonic space at a level.

    Solves the dense symmetric pencil S x = lambda M x of the penalized
    operator (``alpha`` defaults to the strong policy) and returns the
    eigenvectors whose eigenvalue is below ``tol`` times the largest one,
    re-orthonormalized in the M product by modified Gram-Schmidt.  Warns
    when the spectral gap at the cut is below a factor 100.
    """
    if alpha is None:
        alpha = strong_alpha(ops.grid.p, ops.grid.h)
    if not alpha > 0:
        raise ValueError('harmonic extraction needs a positive penalization')
    op = hodge_operator(level, ops, alpha)
    lam, vec = eigh(op.S.toarray(), op.M.toarray())
    cut = tol * lam[-1]
    nz = int(np.searchsorted(lam, cut))
    if 0 < nz < len(lam):
        last_zero = max(lam[nz - 1], np.finfo(float).tiny)
        if lam[nz] / last_zero < 100.0:
            warnings.warn(
                f'harmonic cut is not well separated: eigenvalue ratio '
                f'{lam[nz] / last_zero:.1f} < 100 at the nullspace cut')
    fields = []
    Mm = op.M.mat
    for j in range(nz):
        v = vec[:, j].copy()
        for w in fields:
            v -= float(w.coeffs @ (Mm @ v)) * w.coeffs
        nrm = np.sqrt(float(v @ (Mm @ v)))
        fields.append(BrokenField(level, v / nrm, ops.grid))
    return fields


@dataclass
class HodgeDecomposition:
    """M-orthogonal components of a broken field: exact (vB), harmonic (vH),
    co-exact (vBstar) and jump (vJump) parts."""

    vB: BrokenField
    vH: BrokenField
    vBstar: BrokenField
    vJump: BrokenField

    def reconstruction(self):
        total = (self.vB.coeffs + self.vH.coeffs + self.vBstar.coeffs
                 + self.vJump.coeffs)
        return BrokenField(self.vB.level, total, self.vB.grid)

    def components(self):
        return {'vB': self.vB, 'vH': self.vH, 'vBstar': self.vBstar,
                'vJump': self.vJump}


def hodge_decompose(level, v, ops, harmonic=None, alpha=None):
    """Split a broken field into its Hodge-Helmholtz components.

    The jump part is the M-orthogonal complement of the conforming space
    (the range of I - P*); the conforming remainder is split into the exact
    part (M-projection onto the range of D P at the previous level), the
    harmonic part (projection onto the given or computed harmonic basis) and
    the co-exact rest.

    Parameters
    ----------
    level : int
    v : BrokenField
    ops : ComplexOperators
    harmonic : list of BrokenField, optional
        M-orthonormal harmonic basis; computed on the fly when omitted.
    alpha : float, optional
        Penalization used if the harmonic basis must be computed.
    """
    if v.level != level:
        raise ValueError(f'field level {v.level} does not match {level}')
    grid = ops.grid
    M = ops.mass(level).mat
    C = conforming_basis(level, grid).mat

    # conforming M-projection: vc = C y with (C^T M C) y = C^T M v
    CtM = C.T @ M
    A = (CtM @ C).toarray()
    y = np.linalg.solve(A, CtM @ v.coeffs)
    vc = C @ y
    vjump = v.coeffs - vc

    if harmonic is None:
        harmonic = harmonic_basis(level, ops, alpha=alpha)
    vh = np.zeros_like(vc)
    for q in harmonic:
        vh += float(q.coeffs @ (M @ vc)) * q.coeffs

    if level >= 1:
        # M-projection of the conforming part onto Im(D^{l-1} P^{l-1});
        # a basis of that range is D C at the previous level, possibly rank
        # deficient, so solve the M-weighted least squares problem.
        B = (ops.diff(level - 1).mat @ conforming_basis(level - 1, grid).mat)
        L = _mass_cholesky(ops, level)
        Bw = L.T @ B
        rw = L.T @ (vc - vh)
        sol, *_ = lstsq(Bw.toarray() if sps.issparse(Bw) else Bw, rw,
                        lapack_driver='gelsd')
        vb = B @ sol
    else:
        vb = np.zeros_like(vc)

    vbstar = vc - vb - vh
    return HodgeDecomposition(
        vB=BrokenField(level, vb, grid),
        vH=BrokenField(level, vh, grid),
        vBstar=BrokenField(level, vbstar, grid),
        vJump=BrokenField(level, vjump, grid))


def _mass_cholesky(ops, level):
    """Sparse lower Cholesky factor of the block-diagonal mass matrix."""
    from .assembly import _cell_mass_block
    block = _cell_mass_block(level, ops.basis, ops.grid.h)
    Lb = np.linalg.cholesky(block)
    return sps.block_diag([sps.csr_matrix(Lb)] * ops.grid.n_cells,
                          format='csr')


def adjoint_apply(level, q, ops):
    """Apply the discrete adjoint differential to a level-``level`` field.

    Returns d*_{level,h} q at level-1, defined by
    <d* q, v>_M = <q, D P v>_M for all v, i.e. the coefficient vector
    (M^{l-1})^{-1} (D^{l-1} P^{l-1})^T M^l q.
    """
    if level not in (1, 2):
        raise ValueError(f'adjoint maps levels 1 or 2 down, got {level}')
    if q.level != level:
        raise ValueError(f'field level {q.level} does not match {level}')
    DP = conga_diff(level - 1, ops)
    rhs = DP.T @ (ops.mass(level) @ q.coeffs)
    return BrokenField(level - 1, ops.mass_solve(level - 1, rhs), ops.grid)
