import json
import math

import numpy as np
import pytest

from avint.cli import EXIT_FORMAT, EXIT_OK, EXIT_RESONANCE, RunConfig, format_report, main


def run(tmp_path, *argv):
    out = tmp_path / 'report.json'
    code = main(list(argv) + ['--out', str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def test_normal_form(tmp_path):
    code, report = run(tmp_path, 'normal-form', 'builtin:elliptic-x4', '-M', '4')
    assert code == EXIT_OK
    assert report['command'] == 'normal-form'
    assert report['model'] == 'elliptic-x4'
    assert report['schema_version'] == 1
    action = {tuple(t['powers']): t['coef'] for t in report['action_polynomial']}
    assert action[(2,)] == pytest.approx(1.5, abs=1e-9)
    assert action[(1,)] == pytest.approx(1., abs=1e-9)
    assert report['mu'] == [[0., -1.]]
    assert report['reality_residual'] < 1e-12


def test_resonant_model(tmp_path, capsys):
    code, report = run(tmp_path, 'normal-form', 'builtin:resonant-1-2', '-M', '3')
    assert code == EXIT_RESONANCE
    assert report is None
    assert 'k=[2, -1]' in capsys.readouterr().err


@pytest.mark.parametrize('model', ['builtin:pendulum', 'missing.json'])
def test_bad_models(tmp_path, model):
    code, report = run(tmp_path, 'normal-form', model)
    assert code == EXIT_FORMAT
    assert report is None


def test_invalid_model_file(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'schema_version': 1, 'elliptic': [0.0],
                                'H_star': [{'alpha': [1], 'beta': [1], 're': 1.0}]}))
    code, _ = run(tmp_path, 'normal-form', str(path))
    assert code == EXIT_FORMAT
    err = capsys.readouterr().err
    assert 'omega[0] = 0' in err and 'degree 2 < 3' in err


def test_generator_without_nonlinearity(tmp_path):
    path = tmp_path / 'linear.json'
    path.write_text(json.dumps({'schema_version': 1, 'elliptic': [1.0]}))
    code, report = run(tmp_path, 'generator', str(path))
    assert code == EXIT_OK
    assert report['zero'] is True
    assert len(report['samples']) == 11
    assert all(sample['K'] == [] for sample in report['samples'])
    assert report['fitted_rate'] is None


def test_verify_subset(tmp_path):
    code, report = run(tmp_path, 'verify', 'builtin:elliptic-x3', '--checks', 'theta_map,initial_condition,reality')
    assert code == EXIT_OK
    assert report['passed'] is True
    assert [c['name'] for c in report['checks']] == ['theta_map', 'initial_condition', 'reality']
    assert all('runtime' not in c for c in report['checks'])


def test_verify_no_checks(tmp_path):
    code, report = run(tmp_path, 'verify', 'builtin:elliptic-x3', '--checks', '')
    assert code == EXIT_OK
    assert report['checks'] == []


def test_verify_unknown_check(tmp_path):
    code, _ = run(tmp_path, 'verify', 'builtin:elliptic-x3', '--checks', 'tail,nope')
    assert code == EXIT_FORMAT


def test_trajectory(tmp_path):
    code, report = run(tmp_path, 'trajectory', 'builtin:elliptic-x3', '--T', '1', '--dt', '0.25')
    assert code == EXIT_OK
    rows = report['rows']
    assert [r['t'] for r in rows] == [0., 0.25, 0.5, 0.75, 1.]
    energies = [r['H'] for r in rows]
    assert max(energies) - min(energies) < 1e-9
    assert len(rows[0]['integrals']) == 1
    np.testing.assert_allclose(rows[0]['state'], report['initial_point'], atol=1e-9)


def test_trajectory_direct(tmp_path):
    code, report = run(tmp_path, 'trajectory', 'builtin:elliptic-cubic-weak', '--T', '1', '--dt', '0.5',
                       '--method', 'direct')
    assert code == EXIT_OK
    energies = [r['H'] for r in report['rows']]
    assert len(energies) == 3
    assert max(energies) - min(energies) < 1e-10


def test_verify_vanishing_order(tmp_path):
    code, report = run(tmp_path, 'verify', 'builtin:elliptic-cubic-weak', '--checks', 'vanishing_order')
    assert code == EXIT_OK
    assert report['checks'][0]['status'] == 'pass'
    assert report['checks'][0]['residual'] >= 4.8


def test_build_F(tmp_path):
    points = tmp_path / 'points.json'
    points.write_text(json.dumps([[0., 0.], [0.05, -0.02]]))
    code, report = run(tmp_path, 'build-F', 'builtin:elliptic-x3', '--points', str(points))
    assert code == EXIT_OK
    assert report['F'][0] == 0.
    assert abs(report['F'][1]) < 1e-6
    assert len(report['vanishing_order']['slopes']) == 20


def test_deterministic_output(tmp_path):
    first = run(tmp_path, 'normal-form', 'builtin:focus-cubic')[1]
    second = run(tmp_path, 'normal-form', 'builtin:focus-cubic')[1]
    assert first == second


def test_format_report():
    text = format_report({'b': 1j, 'a': [math.inf, np.float64(0.5), np.int64(3), np.bool_(True)], 'c': None})
    assert text == format_report({'c': None, 'a': [math.inf, 0.5, 3, True], 'b': complex(0, 1)})
    doc = json.loads(text)
    assert doc == {'a': [None, 0.5, 3, True], 'b': [0., 1.], 'c': None, 'schema_version': 1}
    assert list(doc.keys()) == sorted(doc.keys())


@pytest.mark.parametrize('kwargs', [{'M': 2}, {'M': 4, 'dt': 0.}, {'M': 4, 'T': -1.}, {'M': 4, 'checks': ['x']},
                                    {'M': 4, 'method': 'euler'}])
def test_run_config_validation(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)
