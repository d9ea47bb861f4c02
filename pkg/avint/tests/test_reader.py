import json

import pytest

from avint.data import BUILTIN_MODELS, fetch_model, model_from_dict, model_to_dict, parse_model, save_model
from avint.error import ModelFormatError


def minimal_doc(**kwargs):
    doc = {
        'schema_version': 1,
        'elliptic': [1.0],
        'H_star': [{'alpha': [3], 'beta': [0], 're': 1.0, 'im': 0.0}],
    }
    doc.update(kwargs)
    return doc


def write(tmp_path, doc, name='model.json'):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


def test_parse_minimal(tmp_path):
    spec = parse_model(write(tmp_path, minimal_doc(), 'oscillator.json'))
    assert (spec.n1, spec.n2, spec.n) == (0, 1, 1)
    assert spec.omega == (1.,)
    assert spec.Hstar[(3, 0)] == 1.
    assert spec.name == 'oscillator'


def test_name_field_wins(tmp_path):
    spec = parse_model(write(tmp_path, minimal_doc(name='duffing')))
    assert spec.name == 'duffing'


@pytest.mark.parametrize('doc,fragment', [
    (minimal_doc(elliptic=[0.0]), 'omega[0] = 0'),
    (minimal_doc(H_star=[{'alpha': [2], 'beta': [0], 're': 1.0}]), 'degree 2 < 3'),
    (minimal_doc(H_star=[{'alpha': [3], 'beta': [0], 're': 1.0, 'im': 0.5}]), 'complex coefficient'),
    (minimal_doc(H_star=[{'alpha': [3, 0], 'beta': [0], 're': 1.0}]), 'nonnegative integers'),
    (minimal_doc(schema_version=2), 'schema_version'),
    (minimal_doc(colour='blue'), 'unknown fields'),
    (minimal_doc(focus=[{'a': 0.0, 'b': 0.0}]), 'degenerate focus block'),
])
def test_invalid_models(doc, fragment):
    with pytest.raises(ModelFormatError) as excinfo:
        model_from_dict(doc)
    assert any(fragment in v for v in excinfo.value.violations), excinfo.value.violations


def test_violations_are_collected():
    doc = minimal_doc(elliptic=[0.0], schema_version=7,
                      H_star=[{'alpha': [1], 'beta': [1], 're': 1.0}, {'alpha': [3], 'beta': [0], 're': 1., 'im': 1.}])
    with pytest.raises(ModelFormatError) as excinfo:
        model_from_dict(doc)
    assert len(excinfo.value.violations) >= 4


def test_not_an_object():
    with pytest.raises(ModelFormatError):
        model_from_dict([1, 2, 3])


def test_malformed_and_missing_files(tmp_path):
    with pytest.raises(ModelFormatError):
        parse_model(write(tmp_path, '{"schema_version": 1, '))
    with pytest.raises(ModelFormatError):
        parse_model(tmp_path / 'missing.json')


def test_save_and_parse(tmp_path):
    for name in ('focus-cubic', 'hyperbolic-x3', 'elliptic2-cubic'):
        spec = fetch_model(name)
        path = tmp_path / 'models' / f'{name}.json'
        save_model(spec, path)
        back = parse_model(path)
        assert model_to_dict(back) == model_to_dict(spec)


@pytest.mark.parametrize('name', BUILTIN_MODELS)
def test_builtin_models_are_valid(name):
    spec = fetch_model(name)
    assert spec.violations() == []
    assert spec.name == name
    assert model_from_dict(model_to_dict(spec)).n == spec.n


def test_unknown_builtin():
    with pytest.raises(AssertionError):
        fetch_model('pendulum')
