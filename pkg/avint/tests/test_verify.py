import unittest

import numpy as np
import pytest

from avint.averaging import averaging_normal_form
from avint.data import fetch_model
from avint.error import ResonanceError
from avint.functional import fit_decay_rate
from avint.globalize import MollifiedGenerator
from avint.polyalg import ComplexPolynomial
from avint.verify import ALL_CHECKS, Status, VerificationReport, Verifier, oracles, properties, run_verification

ALGEBRAIC_CHECKS = [
    'divisor_scan', 'theta_map', 'h2_complexification', 'initial_condition', 'decay_law', 'flow_consistency',
    'coupling_formula', 'reality', 'cross_oracle', 'normal_form_reality', 'invariant_expression', 'generator_decay',
    'mollifier_order', 'spatial_decay',
]


class TestVerificationReport(unittest.TestCase):

    def test_empty(self):
        report = VerificationReport('m', 4, 0)
        self.assertTrue(report.passed)
        self.assertEqual(report.to_dict(), {'model': 'm', 'M': 4, 'seed': 0, 'passed': True, 'checks': []})

    def test_failed_and_errors(self):
        report = VerificationReport('m', 4, 0)
        report.add('tail', Status.PASS, 1e-12, 1e-10)
        report.add('energy', Status.FAIL, 1e-3, 1e-8)
        report.add('involution', Status.SKIPPED, msg='trivial')
        report.add('reality', Status.ERROR, msg='boom')
        self.assertEqual(report.failed, ['energy', 'reality'])
        self.assertFalse(report.passed)
        doc = report.to_dict()
        self.assertEqual([c['status'] for c in doc['checks']], ['pass', 'fail', 'skipped', 'error'])
        self.assertNotIn('runtime', doc['checks'][0])
        self.assertIn('runtime', report.to_dict(include_runtime=True)['checks'][0])
        self.assertEqual(doc['checks'][2]['msg'], 'trivial')
        self.assertEqual(list(report.frame.name), ['tail', 'energy', 'involution', 'reality'])

    def test_duplicate_check(self):
        report = VerificationReport()
        report.add('tail', Status.PASS, 0., 1.)
        with self.assertRaises(AssertionError):
            report.add('tail', Status.PASS, 0., 1.)


class TestVerifier(unittest.TestCase):

    def test_algebraic_checks_pass(self):
        for name in ('elliptic-x3', 'elliptic2-cubic'):
            report = run_verification(fetch_model(name), 4, checks=ALGEBRAIC_CHECKS)
            self.assertTrue(report.passed, msg=str(report))
            self.assertEqual(len(report.rows), len(ALGEBRAIC_CHECKS))

    def test_decay_law_skipped_without_cubic_part(self):
        report = run_verification(fetch_model('elliptic-x4'), 4, checks=['decay_law', 'initial_condition'])
        statuses = {r['name']: r['status'] for r in report.rows}
        self.assertEqual(statuses, {'decay_law': 'skipped', 'initial_condition': 'pass'})
        self.assertTrue(report.passed)

    def test_involution_skipped_for_one_degree_of_freedom(self):
        report = run_verification(fetch_model('elliptic-x3'), 4, checks=['involution'])
        self.assertEqual(report.rows[0]['status'], Status.SKIPPED.value)

    def test_involution_two_degrees_of_freedom(self):
        report = run_verification(fetch_model('elliptic2-cubic'), 4, checks=['involution'])
        self.assertEqual(report.rows[0]['status'], Status.PASS.value, msg=str(report))
        self.assertLessEqual(report.rows[0]['residual'], 1e-5)

    def test_vanishing_order_check(self):
        verifier = Verifier(fetch_model('elliptic-cubic-weak'), 4)
        report = verifier.run(['vanishing_order'])
        self.assertTrue(report.passed, msg=str(report))
        self.assertEqual(len(verifier.vanishing_order.slopes), 20)

    def test_flow_checks(self):
        report = run_verification(fetch_model('elliptic-x3'), 4, n_points=3,
                                  checks=['flow_roundtrip', 'symplecticity'])
        self.assertTrue(report.passed, msg=str(report))

    def test_empty_and_unknown_checks(self):
        verifier = Verifier(fetch_model('elliptic-x3'), 4)
        report = verifier.run([])
        self.assertTrue(report.passed)
        self.assertEqual(report.to_dict()['checks'], [])
        with self.assertRaises(ValueError):
            verifier.run(['tail', 'not-a-check'])

    def test_invalid_order(self):
        with self.assertRaises(ValueError):
            Verifier(fetch_model('elliptic-x3'), 2)

    def test_resonance_aborts(self):
        with self.assertRaises(ResonanceError):
            run_verification(fetch_model('resonant-1-2'), 4, checks=['theta_map'])

    def test_errors_are_reported(self):
        class Broken(Verifier):
            def check_tail(self):
                raise RuntimeError('boom')

        report = Broken(fetch_model('elliptic-x3'), 4).run(['theta_map', 'tail'])
        self.assertEqual(report.failed, ['tail'])
        self.assertIn('RuntimeError', report.rows[1]['msg'])
        with self.assertRaises(RuntimeError):
            Broken(fetch_model('elliptic-x3'), 4, raise_errors=True).run(['tail'])

    def test_deterministic(self):
        spec = fetch_model('elliptic-x3')
        first = run_verification(spec, 4, seed=3, checks=['reality', 'cross_oracle']).to_dict()
        second = run_verification(spec, 4, seed=3, checks=['reality', 'cross_oracle']).to_dict()
        self.assertEqual(first, second)


class TestOracles(unittest.TestCase):

    def test_lie_transform_with_zero_generator(self):
        h = ComplexPolynomial(1, {(1, 1): -1j, (2, 1): 0.5, (4, 2): 1.})
        out = oracles.lie_transform(h, ComplexPolynomial.zero(1), 4)
        self.assertTrue(out.allclose(h.truncate(4)))

    def test_lie_transform_preserves_brackets_with_itself(self):
        # exp(ad_chi) chi = chi
        chi = ComplexPolynomial(1, {(3, 0): 1., (1, 2): -0.5j})
        out = oracles.lie_transform(chi, chi, 6)
        self.assertTrue(out.allclose(chi))

    def test_birkhoff_quartic_oscillator(self):
        nf = oracles.birkhoff_oracle(fetch_model('elliptic-x4'), 4)
        self.assertAlmostEqual(nf.N[(4, 0)].real, 0.375, places=12)

    def test_birkhoff_resonant(self):
        with self.assertRaises(ResonanceError):
            oracles.birkhoff_oracle(fetch_model('resonant-1-2'), 3)


def test_involution_at_unit_ball_points():
    spec = fetch_model('elliptic2-cubic')
    nf, ev, theta = averaging_normal_form(spec, 4)
    frame = properties.involution_test(spec, MollifiedGenerator(ev, theta, 4), n_points=10, seed=0)
    assert len(frame) == 10
    assert frame.bracket.abs().max() <= 1e-5


def test_quadratic_invariants_commute():
    for name in ('elliptic2-cubic', 'focus-cubic'):
        assert properties.quadratic_brackets_residual(fetch_model(name)) == 0.


@pytest.mark.parametrize('check', ALL_CHECKS)
def test_every_check_is_implemented(check):
    assert callable(getattr(Verifier, f'check_{check}', None))


def test_fit_decay_rate_on_exponential():
    deltas = np.linspace(2., 12., 11)
    assert abs(fit_decay_rate(deltas, 3. * np.exp(-0.7 * deltas)) - 0.7) < 1e-10
