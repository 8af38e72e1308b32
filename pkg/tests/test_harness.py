import json
from dataclasses import replace

import numpy as np
import pytest

from conga_hodge.harness import (CASES, ConfigError, ExperimentConfig,
                                 ManufacturedCase, main, parse_alpha_policy,
                                 register_case, resolve_alpha,
                                 run_convergence, run_decompose,
                                 run_eigen_study, run_verify, _write_outputs)


def small_cfg(kind='source-convergence', **kw):
    base = dict(kind=kind, Ks=(2,), ps=(1,), alpha=('strong',))
    base.update(kw)
    return ExperimentConfig(**base)


def test_parse_alpha_policy():
    assert parse_alpha_policy('strong') == 'strong'
    assert parse_alpha_policy('zero') == 'zero'
    assert parse_alpha_policy('const:2.5') == 'const:2.5'
    for bad in ('weak', 'const:x', 'const:-1', 'const:0'):
        with pytest.raises(ConfigError):
            parse_alpha_policy(bad)


def test_resolve_alpha():
    h = 2 * np.pi / 8
    assert resolve_alpha('strong', 3, h) == pytest.approx(160.0 / h)
    assert resolve_alpha('const:2.5', 3, h) == 2.5
    assert resolve_alpha('zero', 3, h) == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(kind='nope')
    with pytest.raises(ConfigError):
        small_cfg(Ks=())
    with pytest.raises(ConfigError):
        small_cfg(mask='disc')
    with pytest.raises(ConfigError):
        small_cfg(mask='annulus', Ks=(2,))
    with pytest.raises(ConfigError):
        small_cfg(case='missing-case')
    with pytest.raises(ConfigError):
        small_cfg(eig_count=0)
    with pytest.raises(ConfigError):
        small_cfg(alpha=('const:nan.x',))


def test_config_hash_ignores_output_path():
    a = small_cfg(out='here')
    b = small_cfg(out='there')
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != small_cfg(seed=99).content_hash()


def test_config_grid_spec_masks():
    cfg = small_cfg(kind='eigen-study', Ks=(4,), ps=(2,))
    assert cfg.grid_spec(4, 2).mask is None
    ring = small_cfg(mask='annulus', Ks=(4,)).grid_spec(4, 2)
    assert len(ring.mask) == 4 ** 2 - 2 ** 2


def test_config_from_file(tmp_path):
    path = tmp_path / 'c.json'
    path.write_text(json.dumps({'Ks': [2, 3], 'ps': [1], 'alpha': 'zero'}))
    cfg = ExperimentConfig.from_file(path, 'source-convergence')
    assert cfg.Ks == (2, 3) and cfg.ps == (1,)
    assert cfg.alpha == ('zero',)
    # kind defaults fill unset fields
    path.write_text('{}')
    cfg = ExperimentConfig.from_file(path, 'eigen-study')
    assert cfg.ps == (2,)
    assert cfg.alpha == ('strong', 'const:1', 'zero')
    # CLI overrides win over the file
    path.write_text(json.dumps({'alpha': ['strong'], 'seed': 7}))
    cfg = ExperimentConfig.from_file(path, 'eigen-study',
                                     {'alpha': ('zero',), 'seed': 11})
    assert cfg.alpha == ('zero',) and cfg.seed == 11


def test_config_from_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / 'missing.json', 'verify')
    bad = tmp_path / 'bad.json'
    bad.write_text('{not json')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(bad, 'verify')
    bad.write_text('[1, 2]')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(bad, 'verify')
    bad.write_text(json.dumps({'Kz': [2]}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(bad, 'verify')
    bad.write_text(json.dumps({'kind': 'verify'}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(bad, 'eigen-study')


def test_register_case_rejects_duplicates():
    with pytest.raises(ValueError):
        register_case(ManufacturedCase('zero', 1.0, lambda omega: None))


def test_run_convergence_rows_and_orders():
    cfg = small_cfg(Ks=(2, 3), ps=(1,))
    columns, rows, header, extra = run_convergence(cfg)
    assert columns[0] == 'method'
    # one conforming row plus one conga row per (p, K)
    assert len(rows) == 2 * 2
    methods = [r['method'] for r in rows]
    assert methods == ['conforming', 'conga'] * 2
    for r in rows:
        assert r['rel_err_broken'] > 0
        assert not r['err_is_absolute']
        if r['method'] == 'conforming':
            assert r['jump_norm'] == 0.0
            assert r['alpha'] == ''
    assert any(k.startswith('order ') for k in header)
    assert 'method=conga p=1 alpha=strong' in extra['orders']


def test_run_convergence_zero_case_flags_absolute_errors():
    cfg = small_cfg(case='zero')
    _, rows, _, _ = run_convergence(cfg)
    for r in rows:
        assert r['err_is_absolute']
        assert r['rel_err_broken'] < 1e-10


def test_run_eigen_study_rows():
    cfg = ExperimentConfig(kind='eigen-study', Ks=(2,), ps=(2,),
                           alpha=('strong', 'zero'), eig_count=6)
    columns, rows, header, extra = run_eigen_study(cfg)
    assert len(rows) == 2 * 6
    strong_rows = [r for r in rows if r['alpha_policy'] == 'strong']
    assert [r['index'] for r in strong_rows] == [1, 2, 3, 4, 5, 6]
    assert strong_rows[0]['lambda_exact'] == 0.25
    # the zero policy reports its kernel block size in the header:
    # dim (I - P1) V1 = 4K^2 + 4K at p = 2
    assert extra['near_zero_counts']['p=2 K=2 alpha=zero'] == 4 * 2 ** 2 + 4 * 2
    assert any('near_zero' in line for line in header)


def test_run_eigen_study_requires_square():
    cfg = ExperimentConfig(kind='eigen-study', Ks=(3,), ps=(2,),
                           mask='annulus')
    with pytest.raises(ConfigError):
        run_eigen_study(cfg)
    with pytest.raises(ConfigError):
        run_eigen_study(ExperimentConfig(kind='eigen-study', a=1.0))


def test_run_verify_all_pass():
    cfg = ExperimentConfig(kind='verify', Ks=(3,), ps=(2,))
    columns, checks, header, extra = run_verify(cfg)
    assert extra['pass']
    names = {c['property'] for c in checks}
    assert {'complex_sequence', 'broken_complex', 'dof_duality',
            'projection_idempotent', 'projection_rank', 'commuting_grad',
            'commuting_curl', 'adjoint_identity', 'harmonic_dimension',
            'unpenalized_kernel', 'hodge_decomposition',
            'jump_bound'} == names
    for c in checks:
        assert c['status'] == 'pass', c


def test_run_verify_flip_fails_sign_sensitive_checks():
    cfg = ExperimentConfig(kind='verify', Ks=(3,), ps=(2,),
                           debug_flip_d1=True)
    _, checks, _, extra = run_verify(cfg)
    assert not extra['pass']
    failed = {c['property'] for c in checks if c['status'] == 'fail'}
    assert failed == {'complex_sequence', 'broken_complex', 'commuting_curl'}


def test_run_decompose_reports_components():
    cfg = ExperimentConfig(kind='decompose-demo', Ks=(3,), ps=(1,),
                           mask='annulus')
    columns, rows, header, extra = run_decompose(cfg)
    assert extra['harmonic_dimension'] == 1
    assert len(rows) == 3 * 4
    for r in rows:
        assert r['reconstruction_residual'] < 1e-10
        assert r['orthogonality_residual'] < 1e-10
    harm_norms = [r['m_norm'] for r in rows if r['component'] == 'vH']
    assert max(harm_norms) > 0


def test_csv_output_format(tmp_path):
    cfg = small_cfg(out=str(tmp_path / 'o'))
    columns, rows, header, extra = run_convergence(cfg)
    csv_path, json_path = _write_outputs(cfg, header, columns, rows, extra)
    text = csv_path.read_text()
    lines = text.splitlines()
    assert lines[0].startswith('# conga-hodge source-convergence')
    assert any(l.startswith('# config: ') for l in lines)
    assert any(l.startswith(f'# config_hash: {cfg.content_hash()}')
               for l in lines)
    assert any(l.startswith('# grid_hashes: K2p1:') for l in lines)
    body = [l for l in lines if not l.startswith('#')]
    assert body[0] == ','.join(columns)
    assert len(body) == 1 + len(rows)
    doc = json.loads(json_path.read_text())
    assert doc['config_hash'] == cfg.content_hash()
    assert doc['columns'] == list(columns)
    assert len(doc['rows']) == len(rows)


def test_eigen_outputs_are_byte_deterministic(tmp_path):
    cfg = ExperimentConfig(kind='eigen-study', Ks=(2,), ps=(1,),
                           alpha=('strong',), eig_count=4,
                           out=str(tmp_path / 'a'))
    columns, rows, header, extra = run_eigen_study(cfg)
    first = _write_outputs(cfg, header, columns, rows, extra)
    cfg2 = replace(cfg, out=str(tmp_path / 'b'))
    columns, rows, header, extra = run_eigen_study(cfg2)
    second = _write_outputs(cfg2, header, columns, rows, extra)
    body1 = first[0].read_text()
    body2 = second[0].read_text()
    # the config echo differs only in the out path; strip it before comparing
    strip = [l for l in body1.splitlines() if not l.startswith('# config: ')]
    strip2 = [l for l in body2.splitlines() if not l.startswith('# config: ')]
    assert strip == strip2


def test_convergence_deterministic_modulo_runtime():
    cfg = small_cfg(Ks=(2,), ps=(1,))
    _, rows1, _, _ = run_convergence(cfg)
    _, rows2, _, _ = run_convergence(cfg)
    for r1, r2 in zip(rows1, rows2):
        for key in r1:
            if key == 'runtime_s':
                continue
            assert r1[key] == r2[key], key


def cli_config(tmp_path, doc):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_convergence_run(tmp_path, capsys):
    cfg = cli_config(tmp_path, {'Ks': [2], 'ps': [1]})
    rc = main(['convergence', '--config', cfg,
               '--out', str(tmp_path / 'out')])
    assert rc == 0
    out = capsys.readouterr().out
    assert 'wrote' in out
    produced = list((tmp_path / 'out').glob('source-convergence_*.csv'))
    assert len(produced) == 1


def test_cli_verify_run(tmp_path, capsys):
    cfg = cli_config(tmp_path, {'Ks': [2], 'ps': [1]})
    rc = main(['verify', '--config', cfg, '--out', str(tmp_path / 'out')])
    assert rc == 0
    assert 'verification passed' in capsys.readouterr().out


def test_cli_verify_negative_control(tmp_path, capsys):
    cfg = cli_config(tmp_path, {'Ks': [2], 'ps': [1], 'debug_flip_d1': True})
    rc = main(['verify', '--config', cfg, '--out', str(tmp_path / 'out')])
    assert rc == 1
    captured = capsys.readouterr()
    assert 'verification FAILED' in captured.err


def test_cli_config_errors(tmp_path, capsys):
    missing = str(tmp_path / 'nope.json')
    assert main(['eigen', '--config', missing]) == 2
    bad_key = cli_config(tmp_path, {'Kz': [2]})
    assert main(['verify', '--config', bad_key]) == 2
    ann = cli_config(tmp_path, {'mask': 'annulus', 'Ks': [3], 'ps': [1]})
    assert main(['eigen', '--config', ann]) == 2
    ok = cli_config(tmp_path, {'Ks': [2], 'ps': [1]})
    assert main(['verify', '--config', ok, '--alpha', 'weak']) == 2
    capsys.readouterr()


def test_cli_seed_and_alpha_overrides(tmp_path, capsys):
    cfg = cli_config(tmp_path, {'Ks': [2], 'ps': [1]})
    rc = main(['convergence', '--config', cfg, '--out',
               str(tmp_path / 'out'), '--alpha', 'const:2', '--seed', '5'])
    assert rc == 0
    capsys.readouterr()
    csv_path = next((tmp_path / 'out').glob('*.csv'))
    text = csv_path.read_text()
    assert '"alpha": ["const:2"]' in text
    assert '"seed": 5' in text
