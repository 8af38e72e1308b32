"""Cartesian cell grid with per-cell Gauss-Lobatto subgrids.

The domain ]0, a[ x ]0, a[ is split into K x K square cells
Omega_k = ](k1-1)h, k1 h[ x ](k2-1)h, k2 h[ with h = a/K; an optional mask
restricts the active region to a connected subset of cells.  Each cell
carries a Gauss-Lobatto subgrid of degree p, giving nodes, (small) edges and
subcells, identified across cell interfaces by exact integer lattice
coordinates: the global position of zeta_{k,i} along one axis is the integer
g = (k-1) p + i in [0, Kp].  Coincident elements therefore compare equal
without floating point tests, which is what the conforming projection needs.

Multi-index enumerations follow the lexicographic order (k1, k2[, d], i1, i2)
with i2 fastest, so that per-cell matrix blocks are Kronecker products of the
1D building blocks in the (x1, x2) order.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .basis1d import gauss_lobatto

__all__ = ['GridSpec', 'GeomElement', 'Grid', 'build_grid']


@dataclass(frozen=True)
class GridSpec:
    """Parameters of the Cartesian grid.

    Attributes
    ----------
    K : int
        Cells per direction.
    p : int
        Polynomial degree of the local spaces.
    a : float
        Domain side length (default 2 pi).
    mask : frozenset of (int, int) or None
        Active cells as 1-based (k1, k2) pairs; None means all cells.
    """

    K: int
    p: int
    a: float = 2.0 * np.pi
    mask: frozenset = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f'K must be a positive integer, got {self.K}')
        if self.p < 1:
            raise ValueError(f'p must be a positive integer, got {self.p}')
        if not self.a > 0:
            raise ValueError(f'domain side length must be positive, got {self.a}')
        if self.mask is not None:
            mask = frozenset((int(k1), int(k2)) for (k1, k2) in self.mask)
            object.__setattr__(self, 'mask', mask)
            if not mask:
                raise ValueError('mask must contain at least one active cell')
            for (k1, k2) in mask:
                if not (1 <= k1 <= self.K and 1 <= k2 <= self.K):
                    raise ValueError(f'mask cell {(k1, k2)} outside [1..{self.K}]^2')
            if not _connected(mask):
                raise ValueError('mask must be a connected union of cells')

    @property
    def h(self):
        return self.a / self.K

    def active_cells(self):
        """Sorted list of active (k1, k2) cells."""
        if self.mask is None:
            return [(k1, k2) for k1 in range(1, self.K + 1)
                    for k2 in range(1, self.K + 1)]
        return sorted(self.mask)

    def content_hash(self):
        """Hex digest identifying (K, p, a, mask); used in file headers."""
        payload = json.dumps(
            {'K': self.K, 'p': self.p, 'a': self.a,
             'mask': sorted(self.mask) if self.mask is not None else None},
            sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_json(self):
        return {'K': self.K, 'p': self.p, 'a': self.a,
                'mask': [list(c) for c in sorted(self.mask)]
                        if self.mask is not None else None}

    @classmethod
    def from_json(cls, doc):
        mask = doc.get('mask')
        return cls(K=int(doc['K']), p=int(doc['p']),
                   a=float(doc.get('a', 2.0 * np.pi)),
                   mask=frozenset((int(c[0]), int(c[1])) for c in mask)
                        if mask is not None else None)


def _connected(cells):
    """4-adjacency connectivity of a set of (k1, k2) cells."""
    cells = set(cells)
    seen = {next(iter(sorted(cells)))}
    stack = list(seen)
    while stack:
        k1, k2 = stack.pop()
        for nb in ((k1 + 1, k2), (k1 - 1, k2), (k1, k2 + 1), (k1, k2 - 1)):
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen == cells


@dataclass(frozen=True, order=True)
class GeomElement:
    """Canonical identity of a node, edge or subcell on the global subgrid.

    ``kind`` is 'n', 'e' or 'c'.  For nodes and subcells, (g1, g2) are the
    lattice coordinates of the point (resp. the lower-left corner).  For
    edges, ``direction`` is the tangent axis d in {1, 2} and (g1, g2) the
    lattice coordinates of the lower endpoint.
    """

    kind: str
    g1: int
    g2: int
    direction: int = 0


class Grid:
    """Built grid: enumerations, element identities, boundary classification.

    Use :func:`build_grid` to construct one.  Immutable after construction.
    """

    def __init__(self, spec):
        self.spec = spec
        self.K, self.p, self.a = spec.K, spec.p, spec.a
        self.h = spec.h
        self.cells = spec.active_cells()
        self.n_cells = len(self.cells)
        p = self.p

        # Gauss-Lobatto break points per interval I_k, shared reference points
        ref = gauss_lobatto(p)
        self.ref_nodes = ref
        # zeta[k-1, j] = h (k - 1 + ref_j), exact lattice at integer multiples
        self.zeta = self.h * (np.arange(self.K)[:, None] + ref[None, :])

        self.indices = {0: [], 1: [], 2: []}
        for k in self.cells:
            for i1 in range(p + 1):
                for i2 in range(p + 1):
                    self.indices[0].append((k, (i1, i2)))
        for k in self.cells:
            for d in (1, 2):
                r1 = range(p) if d == 1 else range(p + 1)
                r2 = range(p + 1) if d == 1 else range(p)
                for i1 in r1:
                    for i2 in r2:
                        self.indices[1].append((k, d, (i1, i2)))
        for k in self.cells:
            for i1 in range(p):
                for i2 in range(p):
                    self.indices[2].append((k, (i1, i2)))

        self.index_of = {
            level: {mu: pos for pos, mu in enumerate(self.indices[level])}
            for level in (0, 1, 2)}

        # boundary faces of the active region, as (line level, cell index)
        active = set(self.cells)
        self._hfaces = set()   # (g2 line, k1 column): horizontal face pieces
        self._vfaces = set()   # (g1 line, k2 row): vertical face pieces
        for (k1, k2) in self.cells:
            if (k1, k2 - 1) not in active:
                self._hfaces.add(((k2 - 1) * p, k1))
            if (k1, k2 + 1) not in active:
                self._hfaces.add((k2 * p, k1))
            if (k1 - 1, k2) not in active:
                self._vfaces.add(((k1 - 1) * p, k2))
            if (k1 + 1, k2) not in active:
                self._vfaces.add((k1 * p, k2))
        # covered lattice points per boundary line, for node classification
        self._hcov = {}
        for (g2, k1) in self._hfaces:
            cov = self._hcov.setdefault(g2, set())
            cov.update(range((k1 - 1) * p, k1 * p + 1))
        self._vcov = {}
        for (g1, k2) in self._vfaces:
            cov = self._vcov.setdefault(g1, set())
            cov.update(range((k2 - 1) * p, k2 * p + 1))

        self._mult = {level: {} for level in (0, 1, 2)}
        for level in (0, 1, 2):
            for mu in self.indices[level]:
                g = self.geom_identity(level, mu)
                self._mult[level][g] = self._mult[level].get(g, 0) + 1

    def n_dofs(self, level):
        return len(self.indices[level])

    def geom_identity(self, level, mu):
        """Canonical GeomElement of the multi-index mu at the given level."""
        p = self.p
        if level == 0:
            (k1, k2), (i1, i2) = mu
            return GeomElement('n', (k1 - 1) * p + i1, (k2 - 1) * p + i2)
        if level == 1:
            (k1, k2), d, (i1, i2) = mu
            return GeomElement('e', (k1 - 1) * p + i1, (k2 - 1) * p + i2, d)
        if level == 2:
            (k1, k2), (i1, i2) = mu
            return GeomElement('c', (k1 - 1) * p + i1, (k2 - 1) * p + i2)
        raise ValueError(f'level must be 0, 1 or 2, got {level}')

    def multiplicity(self, level, g):
        """Number of multi-indices sharing the geometric element g."""
        return self._mult[level][g]

    def on_boundary(self, g):
        """Whether the element lies on the boundary of the active region.

        Nodes lie on the boundary when they belong to some boundary face;
        edges when the whole segment is contained in one; subcells never.
        """
        if g.kind == 'n':
            return (g.g1 in self._hcov.get(g.g2, ()) or
                    g.g2 in self._vcov.get(g.g1, ()))
        if g.kind == 'e':
            p = self.p
            if g.direction == 1:
                # segment [g1, g1+1] on the line x2 = g2: inside the column
                # of the cell that owns it
                return (g.g2, g.g1 // p + 1) in self._hfaces
            return (g.g1, g.g2 // p + 1) in self._vfaces
        return False

    def elements(self, level):
        """Distinct GeomElements at a level, in first-appearance order."""
        return list(self._mult[level].keys())

    def conforming_size(self, level):
        """Number of interior (non-boundary) distinct elements at a level."""
        return sum(1 for g in self._mult[level] if not self.on_boundary(g))


def build_grid(spec):
    """Build a :class:`Grid` from a :class:`GridSpec`.

    Raises ValueError for invalid parameters (non-positive K or p,
    disconnected mask).
    """
    return Grid(spec)
