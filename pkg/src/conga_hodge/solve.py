"""Source and eigenvalue solvers for the penalized broken Hodge-Laplacian.

Three discrete problems are covered, all on the vector-valued level of the
grad-curl sequence unless stated otherwise:

* the mixed source problem for the Hodge-Laplacian, solved as a symmetric
  saddle system in the auxiliary variable sigma = d* u, the primal field u
  and (when the domain carries harmonic fields) a multiplier p;
* the Helmholtz-like source problem (-omega^2 + L) u = f, solved directly
  with the stiffness/mass pencil of the operator;
* the generalized eigenproblem S x = lambda M x, solved densely.

The right-hand side moments <f, Lambda_mu> can enter the discrete systems
either filtered through the transposed conforming projection (the default,
which preserves the theoretical jump bound alpha^{-1} ||f||) or raw.

Exact eigenvalues of the continuous operator on the square [0, a]^2 with
a = 2 pi are provided for validation: lambda = (n1^2 + n2^2) / 4 with the
separable eigenmodes (cos(n1 x1 / 2) sin(n2 x2 / 2), 0) and
(0, sin(n1 x1 / 2) cos(n2 x2 / 2)), discarding indices where these vanish.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

from .conga import conga_diff, hodge_operator
from .femspace import BrokenField, moment_vector

__all__ = ['MixedSolution', 'HelmholtzSolution', 'EigenReport',
           'ResonanceError', 'solve_source_mixed', 'solve_helmholtz',
           'solve_helmholtz_conforming', 'eig_hodge', 'exact_eigenvalues',
           'match_eigenvalues']


class ResonanceError(RuntimeError):
    """Raised when the shifted operator of a Helmholtz solve is estimated to
    be numerically singular (omega^2 too close to a discrete eigenvalue)."""


@dataclass
class MixedSolution:
    """Solution triple of the mixed Hodge-Laplace source problem."""

    sigma: BrokenField
    u: BrokenField
    p: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass
class HelmholtzSolution:
    """Solution of the Helmholtz source problem, with solver diagnostics."""

    u: BrokenField
    diagnostics: dict = field(default_factory=dict)


def _moments(level, f, ops):
    if isinstance(f, np.ndarray):
        return f
    return moment_vector(level, f, ops.grid, ops.basis)


def _jump_norm(level, u, ops):
    r = u - ops.projection(level) @ u
    return ops.norm(level, r)


def solve_source_mixed(level, f, ops, alpha, filtered=True, harmonic=None):
    """Solve the mixed formulation of the Hodge-Laplace source problem.

    The unknowns are sigma (one level down), the primal field u and a
    harmonic multiplier p; the symmetric saddle system reads

        -<sigma, tau>   + <u, d_h tau>                             = 0
        <d_h sigma, v>  + <d_h u, d_h v> + alpha <[u], [v]> + <p_H, P v> = <f, P v>
                          <P u, q_H>                               = 0

    with [v] = (I - P) v, and the right-hand side moments unfiltered when
    ``filtered`` is False.  The multiplier block is present only when a
    harmonic basis is given and nonempty.

    Parameters
    ----------
    level : int
        Level of u; must be at least 1.
    f : SmoothFunction, callable or ndarray
        Source term, or its precomputed moment vector.
    ops : ComplexOperators
    alpha : float
        Jump penalization weight; must be positive.
    filtered : bool, optional
        Apply the transposed conforming projection to the source moments.
    harmonic : list of BrokenField, optional
        M-orthonormal harmonic fields of the level.

    Returns
    -------
    MixedSolution
    """
    if level < 1:
        raise ValueError('the mixed solver needs an auxiliary level below')
    if not alpha > 0:
        raise ValueError('the mixed formulation needs a positive penalization')
    grid = ops.grid
    n_s = grid.n_dofs(level - 1)
    n_u = grid.n_dofs(level)

    Ms = ops.mass(level - 1).mat
    Mu = ops.mass(level).mat
    P = ops.projection(level).mat
    DPd = conga_diff(level - 1, ops).mat        # maps level-1 -> level
    B = Mu @ DPd                                # <d_h sigma, v> block

    ImP = sps.eye(n_u, format='csr') - P
    A = ImP.T @ Mu @ ImP
    A = alpha * A
    if level <= 1:
        DPu = conga_diff(level, ops).mat
        A = A + DPu.T @ ops.mass(level + 1).mat @ DPu
    A = 0.5 * (A + A.T)

    b = _moments(level, f, ops)
    rhs_u = P.T @ b if filtered else b

    blocks = [[-Ms, B.T, None], [B, A, None], [None, None, None]]
    rhs = [np.zeros(n_s), rhs_u]
    harmonic = harmonic or []
    if harmonic:
        H = np.column_stack([q.coeffs for q in harmonic])
        G = sps.csr_matrix(P.T @ (Mu @ H))
        blocks[1][2] = G
        blocks[2][1] = G.T
        rhs.append(np.zeros(len(harmonic)))
        K = sps.bmat(blocks, format='csc')
    else:
        K = sps.bmat([[blocks[0][0], blocks[0][1]],
                      [blocks[1][0], blocks[1][1]]], format='csc')
    r = np.concatenate(rhs)

    lu = spla.splu(K)
    x = lu.solve(r)
    res = np.linalg.norm(K @ x - r) / max(np.linalg.norm(r), 1e-300)

    sig = BrokenField(level - 1, x[:n_s], grid)
    u = BrokenField(level, x[n_s:n_s + n_u], grid)
    p = x[n_s + n_u:]
    diag = {'residual': float(res),
            'jump_norm': float(_jump_norm(level, u.coeffs, ops)),
            'alpha': float(alpha), 'filtered': bool(filtered)}
    return MixedSolution(sig, u, p, diag)


def _rcond_estimate(Amat, lu):
    """One-norm reciprocal condition estimate from a factored matrix."""
    n = Amat.shape[0]
    inv = spla.LinearOperator(
        (n, n), matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans='T'))
    na = spla.onenormest(Amat)
    ni = spla.onenormest(inv)
    return 1.0 / (na * ni)


def solve_helmholtz(omega, f, ops, alpha, filtered=True):
    """Solve the vector Helmholtz source problem (-omega^2 + L) u = f.

    Uses the assembled pencil of the penalized Hodge-Laplacian at the
    vector-valued level, so any ``alpha >= 0`` is admissible: for alpha = 0
    the operator has a large kernel but the shifted matrix S - omega^2 M
    remains invertible away from resonances.  A reciprocal condition
    estimate below 1e-12 raises ResonanceError.
    """
    op = hodge_operator(1, ops, alpha)
    A = (op.S.mat - omega ** 2 * op.M.mat).tocsc()
    b = _moments(1, f, ops)
    rhs = ops.projection(1).mat.T @ b if filtered else b

    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise ResonanceError(
            f'shifted operator could not be factorized ({exc}); '
            f'omega^2 = {omega ** 2:g} sits on a discrete eigenvalue')
    rcond = _rcond_estimate(A, lu)
    if rcond < 1e-12:
        raise ResonanceError(
            f'shifted operator is numerically singular (rcond ~ {rcond:.2e});'
            f' omega^2 = {omega ** 2:g} sits on a discrete eigenvalue')
    x = lu.solve(rhs)
    res = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    u = BrokenField(1, x, ops.grid)
    diag = {'residual': float(res), 'rcond_est': float(rcond),
            'jump_norm': float(_jump_norm(1, x, ops)),
            'alpha': float(alpha), 'filtered': bool(filtered),
            'omega': float(omega)}
    return HelmholtzSolution(u, diag)


def solve_helmholtz_conforming(omega, f, ops):
    """Solve the Helmholtz problem in the conforming subcomplex.

    Mixed form in (sigma, u), posed on the conforming spaces through their
    inclusion matrices; avoids inverting the conforming mass matrix.  The
    returned field is the conforming solution expanded in the broken basis.
    """
    from .assembly import conforming_basis
    grid = ops.grid
    C0 = conforming_basis(0, grid).mat
    C1 = conforming_basis(1, grid).mat
    M0, M1, M2 = (ops.mass(l).mat for l in range(3))
    D0, D1 = ops.diff(0).mat, ops.diff(1).mat

    G = D0 @ C0                                  # gradients of conforming V0
    R = D1 @ C1
    M00 = C0.T @ M0 @ C0
    M11 = C1.T @ M1 @ C1
    B = C1.T @ M1 @ G
    A = R.T @ M2 @ R - omega ** 2 * M11
    K = sps.bmat([[-M00, B.T], [B, 0.5 * (A + A.T)]], format='csc')

    b = _moments(1, f, ops)
    rhs = np.concatenate([np.zeros(C0.shape[1]), C1.T @ b])
    x = spla.splu(K).solve(rhs)
    uc = x[C0.shape[1]:]
    u = BrokenField(1, C1 @ uc, grid)
    res = np.linalg.norm(K @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    return HelmholtzSolution(u, {'residual': float(res),
                                 'omega': float(omega),
                                 'method': 'conforming'})


@dataclass
class EigenReport:
    """Full sorted spectrum of the pencil S x = lambda M x at one level."""

    level: int
    alpha: float
    eigenvalues: np.ndarray
    zero_tol: float

    def near_zero(self):
        """Boolean mask of the eigenvalues treated as kernel."""
        return self.eigenvalues < self.zero_tol

    def nonzero_eigenvalues(self):
        return self.eigenvalues[~self.near_zero()]

    def smallest_nonzero(self, count):
        nz = self.nonzero_eigenvalues()
        if len(nz) < count:
            raise ValueError(f'only {len(nz)} nonzero eigenvalues available')
        return nz[:count]


def eig_hodge(level, ops, alpha, zero_rel_tol=1e-9):
    """Dense generalized eigensolve of the penalized Hodge-Laplacian pencil.

    Returns the full real spectrum sorted increasingly.  Eigenvalues below
    ``zero_rel_tol`` times the largest one are classified as kernel by the
    report's ``near_zero`` mask (relevant for alpha = 0, whose kernel is the
    whole nonconforming complement plus the harmonic fields).
    """
    op = hodge_operator(level, ops, alpha)
    lam = eigh(op.S.toarray(), op.M.toarray(), eigvals_only=True)
    lam = np.maximum(lam, 0.0) if lam[0] > -1e-8 * lam[-1] else lam
    return EigenReport(level, float(alpha), lam,
                       zero_tol=float(zero_rel_tol * lam[-1]))


def exact_eigenvalues(count, level=1, a=2 * np.pi):
    """Smallest exact Hodge-Laplacian eigenvalues on the square, sorted with
    multiplicity.

    At the vector-valued level these are (n1^2 + n2^2) / 4 for n in N^2,
    counted once per nonvanishing separable mode: the first family needs
    n2 > 0, the second n1 > 0, so indices with n1 n2 > 0 contribute twice.
    At level 0 (Dirichlet scalar Laplacian) both indices must be positive
    and each eigenvalue counts once per index.
    """
    if abs(a - 2 * np.pi) > 1e-13:
        raise ValueError('exact spectrum is tabulated for the side 2*pi')
    vals = []
    nmax = int(np.ceil(2 * np.sqrt(count))) + 4
    for n1 in range(nmax):
        for n2 in range(nmax):
            lam = 0.25 * (n1 ** 2 + n2 ** 2)
            if level == 1:
                mult = (n2 > 0) + (n1 > 0)
            elif level == 0:
                mult = 1 if (n1 > 0 and n2 > 0) else 0
            else:
                raise ValueError('exact spectrum known at levels 0 and 1')
            vals.extend([lam] * mult)
    vals.sort()
    if len(vals) < count:
        raise ValueError('internal index bound too small')
    return np.array(vals[:count])


def match_eigenvalues(computed, exact, spurious_rtol=0.25):
    """Pair sorted computed eigenvalues with sorted exact ones by index.

    Returns (abs_errors, spurious) where ``spurious`` flags computed values
    deviating from their exact partner by more than ``spurious_rtol``
    relatively.
    """
    computed = np.asarray(computed, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if len(computed) != len(exact):
        raise ValueError('eigenvalue lists must have equal length')
    err = np.abs(computed - exact)
    denom = np.maximum(np.abs(exact), 1e-300)
    return err, err / denom > spurious_rtol
