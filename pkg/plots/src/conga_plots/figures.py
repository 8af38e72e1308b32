"""Render conga-hodge experiment CSVs as figures.

This package talks to the solver package only through its CSV files:
'#' comment lines (version, config echo, hashes, fitted orders), then
one column row, then data rows.  Three figure kinds are supported:

* ``convergence``: relative L2 error against the cell count K on
  log-log axes, one curve per (method, degree, penalization policy),
  with least-squares slopes recomputed from the table,
* ``eigvals``: discrete against exact spectra, one panel per
  penalization policy, spurious entries flagged,
* ``eigerrs``: absolute eigenvalue errors on a log scale.

Rendering is a pure function of the CSV content and the spec; the
figures carry no timestamps and regenerate identically.
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np

KINDS = ('convergence', 'eigvals', 'eigerrs')

# header comment fields that identify a genuine result file
REQUIRED_HASH_FIELDS = ('config_hash', 'grid_hashes')

REQUIRED_COLUMNS = {
    'convergence': ('method', 'p', 'K', 'h', 'alpha_policy',
                    'rel_err_broken'),
    'eigvals': ('p', 'K', 'alpha_policy', 'index', 'lambda_h',
                'lambda_exact', 'spurious'),
    'eigerrs': ('p', 'K', 'alpha_policy', 'index', 'abs_error'),
}

# deterministic ids inside SVG output
plt.rcParams['svg.hashsalt'] = 'conga-plots'


@dataclass(frozen=True)
class FigureSpec:
    """One figure request.

    Parameters
    ----------
    inputs : tuple of str
        Result CSV path(s); several files are concatenated.
    kind : str
        One of ``convergence``, ``eigvals``, ``eigerrs``.
    output : str
        Image path; the suffix picks the format (.png, .svg, ...).
    logy : bool or None
        Force the y scale; None keeps the kind's default (log for
        convergence and eigerrs, linear for eigvals).
    """

    inputs: tuple
    kind: str
    output: str
    dpi: int = 150
    logy: object = None
    title: str = ''

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f'unknown figure kind {self.kind!r}; '
                             f'expected one of {", ".join(KINDS)}')
        if not self.inputs:
            raise ValueError('no input CSV given')


@dataclass
class RenderResult:
    path: str
    slopes: dict = field(default_factory=dict)
    panels: int = 1


def _parse_cell(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def load_table(paths):
    """Read one or more result CSVs into a single row list.

    Returns (rows, comments) where rows are dicts with numeric cells
    already converted and comments are the stripped '#' header lines of
    all files.  Refuses files without the identifying hash fields and
    files with no data rows.
    """
    rows, comments = [], []
    for path in paths:
        lines = [ln for ln in Path(path).read_text().splitlines()
                 if ln.strip()]
        head = [ln.lstrip('# ') for ln in lines if ln.startswith('#')]
        body = [ln for ln in lines if not ln.startswith('#')]
        for name in REQUIRED_HASH_FIELDS:
            if not any(h.startswith(name + ':') for h in head):
                raise ValueError(
                    f'{path}: no {name} header field; not a conga-hodge '
                    'result file')
        table = [{k: _parse_cell(v) for k, v in row.items()}
                 for row in csv.DictReader(body)]
        if not table:
            raise ValueError(f'{path}: empty table, nothing to plot')
        rows.extend(table)
        comments.extend(head)
    return rows, comments


def _check_columns(rows, kind):
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in rows[0]]
    if missing:
        raise ValueError(f'table lacks the {kind} columns '
                         f'{", ".join(missing)}')


def _groups(rows, keys):
    """Partition rows by a key tuple, preserving first-appearance order."""
    out = {}
    for row in rows:
        out.setdefault(tuple(row[k] for k in keys), []).append(row)
    return out


# ── convergence ─────────────────────────────────────────────


def _draw_convergence(ax, rows, logy):
    slopes = {}
    for (method, p, pol), pts in _groups(
            rows, ('method', 'p', 'alpha_policy')).items():
        pts = sorted(pts, key=lambda r: r['K'])
        K = np.array([r['K'] for r in pts], dtype=float)
        err = np.array([r['rel_err_broken'] for r in pts], dtype=float)
        label = f'{method} p={p}'
        if method == 'conga':
            label += f' alpha={pol}'
        ax.plot(K, err, marker='o', label=label)
        fit = err > 0
        if fit.sum() >= 2:
            h = np.array([r['h'] for r in pts], dtype=float)
            slope = float(np.polyfit(np.log(h[fit]), np.log(err[fit]), 1)[0])
            slopes[f'method={method} p={p} alpha={pol}'] = slope
    ax.set_xscale('log', base=2)
    if logy:
        ax.set_yscale('log')
    Ks = sorted({r['K'] for r in rows})
    ax.set_xticks(Ks, [str(K) for K in Ks])
    ax.set_xlabel('K (cells per direction)')
    ax.set_ylabel('relative L2 error')
    ax.grid(True, which='both', alpha=0.3)
    ax.legend()
    return slopes


# ── eigenvalues ─────────────────────────────────────────────


def _policy_order(rows):
    seen = []
    for row in rows:
        if row['alpha_policy'] not in seen:
            seen.append(row['alpha_policy'])
    return seen


def _draw_eigvals(fig, rows, logy):
    policies = _policy_order(rows)
    axes = fig.subplots(1, len(policies), sharey=True, squeeze=False)[0]
    for ax, pol in zip(axes, policies):
        sub = [r for r in rows if r['alpha_policy'] == pol]
        flagged = False
        for (p, K), pts in _groups(sub, ('p', 'K')).items():
            idx = [r['index'] for r in pts]
            ax.plot(idx, [r['lambda_h'] for r in pts], '.',
                    label=f'p={p} K={K}')
            bad = [r for r in pts if r['spurious']]
            if bad:
                ax.scatter([r['index'] for r in bad],
                           [r['lambda_h'] for r in bad], marker='o',
                           facecolors='none', edgecolors='red', s=70,
                           label=None if flagged else 'spurious', zorder=3)
                flagged = True
        exact = sorted({(r['index'], r['lambda_exact']) for r in sub})
        ax.plot([e[0] for e in exact], [e[1] for e in exact], 'k_',
                markersize=9, label='exact')
        if logy:
            ax.set_yscale('log')
        ax.set_title(f'alpha = {pol}')
        ax.set_xlabel('index')
        ax.grid(True, alpha=0.3)
        ax.legend()
    axes[0].set_ylabel('eigenvalue')
    return len(policies)


def _draw_eigerrs(ax, rows, logy):
    for (pol, p, K), pts in _groups(
            rows, ('alpha_policy', 'p', 'K')).items():
        pts = sorted(pts, key=lambda r: r['index'])
        err = np.array([r['abs_error'] for r in pts], dtype=float)
        err[err <= 0] = np.nan   # exact hits cannot sit on a log axis
        ax.plot([r['index'] for r in pts], err, marker='.',
                label=f'alpha={pol} p={p} K={K}')
    if logy:
        ax.set_yscale('log')
    ax.set_xlabel('index')
    ax.set_ylabel('absolute eigenvalue error')
    ax.grid(True, which='both', alpha=0.3)
    ax.legend()


def render(spec):
    """Render one figure; returns a RenderResult with the output path,
    the recomputed log-log slopes (convergence kind) and the panel
    count (eigvals kind)."""
    rows, _ = load_table(spec.inputs)
    _check_columns(rows, spec.kind)
    logy = spec.logy if spec.logy is not None else spec.kind != 'eigvals'

    result = RenderResult(path=spec.output)
    if spec.kind == 'eigvals':
        fig = plt.figure(figsize=(10, 4.2))
        result.panels = _draw_eigvals(fig, rows, logy)
    else:
        fig = plt.figure(figsize=(6.4, 4.8))
        ax = fig.add_subplot()
        if spec.kind == 'convergence':
            result.slopes = _draw_convergence(ax, rows, logy)
        else:
            _draw_eigerrs(ax, rows, logy)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=spec.dpi, metadata={'Date': None})
    plt.close(fig)
    return result


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog='conga-plots',
        description='render conga-hodge result CSVs as figures')
    parser.add_argument('--kind', required=True, choices=KINDS)
    parser.add_argument('--in', dest='inputs', nargs='+', required=True,
                        metavar='CSV', help='result CSV file(s)')
    parser.add_argument('--out', required=True, help='output image path')
    parser.add_argument('--dpi', type=int, default=150)
    parser.add_argument('--linear-y', action='store_true',
                        help='force a linear y axis')
    parser.add_argument('--title', default='')
    args = parser.parse_args(argv)

    try:
        result = render(FigureSpec(
            inputs=tuple(args.inputs), kind=args.kind, output=args.out,
            dpi=args.dpi, logy=False if args.linear_y else None,
            title=args.title))
    except (OSError, ValueError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2
    print(f'wrote {result.path}')
    for key in sorted(result.slopes):
        print(f'order {key}: {result.slopes[key]:.3g}')
    return 0


if __name__ == '__main__':
    sys.exit(main())
