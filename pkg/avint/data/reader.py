import json
from numbers import Real
from pathlib import Path

import numpy as np

from avint.error import ModelFormatError
from avint.polyalg import ComplexPolynomial, split_key
from avint.spectrum import ModelSpec
from avint.util import save_text_file


SCHEMA_VERSION = 1

_FIELDS = {'schema_version', 'name', 'n1', 'n2', 'n', 'focus', 'elliptic', 'hyperbolic', 'H_star'}


def _is_real(x):
    return isinstance(x, Real) and not isinstance(x, bool) and np.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _real_list(doc, field, violations):
    values = doc.get(field, [])
    if not isinstance(values, list) or not all(_is_real(v) for v in values):
        violations.append(f'"{field}" must be a list of finite numbers')
        return []
    return [float(v) for v in values]


def _parse_focus(doc, violations):
    focus = doc.get('focus', [])
    if not isinstance(focus, list):
        violations.append('"focus" must be a list of {"a": ..., "b": ...} objects')
        return [], []
    a, b = [], []
    for j, block in enumerate(focus):
        if not isinstance(block, dict) or not _is_real(block.get('a')) or not _is_real(block.get('b')):
            violations.append(f'focus block {j} must have finite numeric fields "a" and "b"')
            continue
        a.append(float(block['a']))
        b.append(float(block['b']))
    return a, b


def _parse_terms(doc, n, violations):
    terms = doc.get('H_star', [])
    if not isinstance(terms, list):
        violations.append('"H_star" must be a list of terms')
        return {}
    coeffs = {}
    for t, term in enumerate(terms):
        if not isinstance(term, dict):
            violations.append(f'H_star term {t} is not an object')
            continue
        alpha, beta = term.get('alpha'), term.get('beta')
        valid_index = all(
            isinstance(idx, list) and len(idx) == n and all(_is_int(e) and e >= 0 for e in idx) for idx in (alpha, beta)
        )
        if not valid_index:
            violations.append(f'H_star term {t}: "alpha" and "beta" must be lists of {n} nonnegative integers')
            continue
        re, im = term.get('re'), term.get('im', 0)
        if not _is_real(re) or not _is_real(im):
            violations.append(f'H_star term {t}: "re" and "im" must be finite numbers')
            continue
        if im != 0:
            violations.append(f'H_star term {t}: complex coefficient (im={im}) in a real Hamiltonian')
            continue
        degree = sum(alpha) + sum(beta)
        if degree < 3:
            violations.append(f'H_star term {t}: degree {degree} < 3 (H_star must vanish to order 3)')
            continue
        key = tuple(alpha) + tuple(beta)
        coeffs[key] = coeffs.get(key, 0.) + float(re)
    return coeffs


def model_from_dict(doc, name=None):
    """
    Builds a model from its (already decoded) JSON document. Every violation found is collected before raising.

    :param doc: dict with the fields `schema_version`, `n1`, `n2`, `n`, `focus` (list of `{"a", "b"}`),
        `elliptic` (list of frequencies), `hyperbolic` (list of exponents), `H_star` (list of
        `{"alpha", "beta", "re", "im"}`, monomials :math:`x^\\alpha y^\\beta` in real coordinates) and optionally `name`
    :param name: name of the model, overrides the `name` field
    :return: a :class:`avint.spectrum.ModelSpec`
    """
    if not isinstance(doc, dict):
        raise ModelFormatError(['the model must be a JSON object'])
    violations = []
    version = doc.get('schema_version')
    if version != SCHEMA_VERSION:
        violations.append(f'unsupported schema_version {version!r} (expected {SCHEMA_VERSION})')
    unknown = sorted(set(doc.keys()) - _FIELDS)
    if unknown:
        violations.append(f'unknown fields {unknown}')

    a, b = _parse_focus(doc, violations)
    omega = _real_list(doc, 'elliptic', violations)
    lam = _real_list(doc, 'hyperbolic', violations)
    n1 = doc.get('n1', len(a))
    n2 = doc.get('n2', 2 * n1 + len(omega) if _is_int(n1) else None)
    n = doc.get('n', n2 + len(lam) if _is_int(n2) else None)
    for field, value in (('n1', n1), ('n2', n2), ('n', n)):
        if not _is_int(value):
            violations.append(f'"{field}" must be an integer (found {value!r})')
    if violations and not all(_is_int(v) for v in (n1, n2, n)):
        raise ModelFormatError(violations)

    Hstar = _parse_terms(doc, n, violations)
    try:
        spec = ModelSpec(n1, n2, n, a, b, omega, lam, Hstar=ComplexPolynomial(max(n, 0), Hstar),
                         name=name or doc.get('name'))
    except ModelFormatError as e:
        violations.extend(e.violations)
        spec = None
    if violations:
        raise ModelFormatError(violations)
    return spec


def parse_model(path, encoding='utf-8'):
    """
    Reads a model file (JSON).

    :param path: path to the model file
    :param encoding: the text encoding used to open the file
    :return: a :class:`avint.spectrum.ModelSpec`; its name defaults to the file stem
    """
    try:
        with open(path, 'rt', encoding=encoding) as fin:
            doc = json.load(fin)
    except FileNotFoundError:
        raise ModelFormatError([f'model file {path} not found'])
    except json.JSONDecodeError as e:
        raise ModelFormatError([f'malformed JSON in {path}: {e}'])
    name = doc.get('name') if isinstance(doc, dict) else None
    return model_from_dict(doc, name=name or Path(path).stem)


def model_to_dict(spec: ModelSpec):
    """
    JSON document of a model; :meth:`model_from_dict` inverts it.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :return: dict
    """
    terms = []
    for key, c in spec.Hstar.items():
        alpha, beta = split_key(key)
        terms.append({'alpha': list(alpha), 'beta': list(beta), 're': float(c.real), 'im': 0.})
    doc = {
        'schema_version': SCHEMA_VERSION,
        'n1': spec.n1,
        'n2': spec.n2,
        'n': spec.n,
        'focus': [{'a': a, 'b': b} for a, b in zip(spec.a, spec.b)],
        'elliptic': list(spec.omega),
        'hyperbolic': list(spec.lam),
        'H_star': terms,
    }
    if spec.name:
        doc['name'] = spec.name
    return doc


def save_model(spec: ModelSpec, path):
    """
    Writes a model file that :meth:`parse_model` reads back into an equal model.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :param path: path of the output file (parent directories are created)
    """
    save_text_file(path, json.dumps(model_to_dict(spec), indent=2, sort_keys=True) + '\n')
