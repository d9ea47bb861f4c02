import unittest
import warnings

import numpy as np
import pytest

from avint.data import BUILTIN_MODELS, fetch_model
from avint.error import ConditioningWarning, ModelFormatError, ResonanceError
from avint.functional import reachable_vectors
from avint.polyalg import poisson_bracket
from avint.spectrum import ModelSpec, check_nonresonant, divisor_scan, eigenvalues, min_decay_rate, \
    quadratic_invariant_names, quadratic_invariants, FOCUS, ELLIPTIC, HYPERBOLIC


class TestModelSpec(unittest.TestCase):

    def test_block_layout(self):
        spec = ModelSpec(n1=1, a=[0.5], b=[1.], omega=[2.], lam=[3.])
        self.assertEqual((spec.n1, spec.n2, spec.n), (1, 3, 4))
        self.assertEqual([spec.block_of(i) for i in range(4)], [FOCUS, FOCUS, ELLIPTIC, HYPERBOLIC])
        with self.assertRaises(ValueError):
            spec.block_of(4)

    def test_eigenvalues(self):
        spec = ModelSpec(n1=1, a=[0.5], b=[1.], omega=[2.], lam=[3.])
        mu = eigenvalues(spec)
        np.testing.assert_allclose(mu, [-0.5 - 1j, -0.5 + 1j, -2j, 3.])

    def test_degenerate_frequency(self):
        with self.assertRaises(ModelFormatError) as cm:
            ModelSpec(omega=[0.])
        self.assertEqual(len(cm.exception.violations), 1)

    def test_all_violations_are_collected(self):
        with self.assertRaises(ModelFormatError) as cm:
            ModelSpec(omega=[0.], Hstar={(1, 1): 1j})
        # zero frequency, degree-2 term and complex coefficient
        self.assertEqual(len(cm.exception.violations), 3)

    def test_wrong_block_sizes(self):
        with self.assertRaises(ModelFormatError):
            ModelSpec(n1=1, a=[1.], b=[], omega=[1.])
        with self.assertRaises(ModelFormatError):
            ModelSpec(n1=0, n2=1, n=2, omega=[1.])

    def test_H2_of_elliptic(self):
        spec = fetch_model('elliptic-x3')
        self.assertEqual(spec.H2[(2, 0)], 0.5)
        self.assertEqual(spec.H2[(0, 2)], 0.5)
        self.assertEqual(len(spec.H2), 2)
        self.assertEqual(spec.H[(3, 0)], 1.)

    def test_with_Hstar(self):
        spec = fetch_model('elliptic-x3')
        other = spec.with_Hstar({(4, 0): 2.})
        self.assertEqual(other.omega, spec.omega)
        self.assertEqual(other.Hstar[(4, 0)], 2.)


class TestQuadraticInvariants(unittest.TestCase):

    def test_names(self):
        spec = ModelSpec(n1=1, a=[0.5], b=[1.], omega=[2.], lam=[3.])
        self.assertEqual(quadratic_invariant_names(spec), ['Fa1', 'Fb1', 'E1', 'H1'])

    def test_invariants_commute_with_H2(self):
        for name in BUILTIN_MODELS:
            spec = fetch_model(name)
            for Q in quadratic_invariants(spec):
                self.assertLess(poisson_bracket(Q, spec.H2).max_abs(), 1e-15, msg=name)

    def test_invariants_in_involution(self):
        spec = ModelSpec(n1=1, a=[0.5], b=[1.], omega=[2.], lam=[3.])
        Q = quadratic_invariants(spec)
        for i in range(len(Q)):
            for j in range(i + 1, len(Q)):
                self.assertTrue(poisson_bracket(Q[i], Q[j]).is_zero())


class TestDivisors(unittest.TestCase):

    def test_reachable_vectors(self):
        self.assertEqual(reachable_vectors(1, 3), [(1,), (3,)])
        self.assertEqual(reachable_vectors(1, 4), [(1,), (2,), (3,), (4,)])
        for k in reachable_vectors(2, 5):
            first = next(ki for ki in k if ki != 0)
            self.assertGreater(first, 0)

    def test_resonance_is_reported(self):
        mu = eigenvalues(fetch_model('resonant-1-2'))
        report = divisor_scan(mu, 3)
        self.assertFalse(report.ok)
        self.assertEqual(report.resonances[0], (2, -1))
        with self.assertRaises(ResonanceError) as cm:
            report.raise_if_resonant()
        self.assertEqual(cm.exception.k, (2, -1))
        self.assertLess(abs(cm.exception.divisor), 1e-12)

    def test_check_nonresonant(self):
        mu = eigenvalues(fetch_model('resonant-1-2'))
        with self.assertRaises(ResonanceError):
            check_nonresonant(mu, 4)
        report = check_nonresonant(eigenvalues(fetch_model('elliptic2-cubic')), 4)
        self.assertTrue(report.ok)

    def test_min_decay_rate(self):
        mu = [-1j, -1j * np.sqrt(2)]
        self.assertAlmostEqual(min_decay_rate(mu, 4), np.sqrt(2) - 1, places=12)
        self.assertAlmostEqual(min_decay_rate([-1j], 4), 1., places=12)

    def test_near_resonance_warns(self):
        mu = [-1j, -1j * (2 + 1e-10)]
        with pytest.warns(ConditioningWarning):
            report = divisor_scan(mu, 3, divisor_tol=1e-12, near_tol=1e-9)
        self.assertTrue(report.ok)
        self.assertEqual(report.near_resonances, [(2, -1)])

    def test_summary(self):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', ConditioningWarning)
            summary = divisor_scan(eigenvalues(fetch_model('elliptic-x3')), 4).summary()
        self.assertEqual(summary['n_vectors'], 4)
        self.assertEqual(summary['min'], 1.)
        self.assertEqual(summary['resonances'], [])

    def test_order_too_small(self):
        with self.assertRaises(ValueError):
            divisor_scan([-1j], 2)
