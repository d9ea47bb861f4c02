import doctest
import unittest

import numpy as np
import pytest

from avint.error import ConditioningWarning, DivergentTermError
import avint.exppoly
from avint.exppoly import ExpPolyFunction, solve_damped_linear


def residual_of_ode(c, lam, f, deltas):
    # c' + lam c + f
    dc = c.derivative()
    return max(abs(dc(d) + lam * c(d) + f(d)) for d in deltas)


class TestExpPolyFunction(unittest.TestCase):

    def test_evaluation(self):
        f = ExpPolyFunction([(3., 0, 2.), (1j, 2, 0.5)])
        for d in (0., 0.3, 2.):
            self.assertAlmostEqual(abs(f(d) - (3 * np.exp(-2 * d) + 1j * d ** 2 * np.exp(-0.5 * d))), 0., places=14)
        values = f(np.asarray([0., 1.]))
        self.assertEqual(values.shape, (2,))

    def test_rates_are_merged(self):
        f = ExpPolyFunction([(1., 0, 1.), (1., 0, 1. + 1e-14)])
        self.assertEqual(len(f), 1)
        self.assertEqual(f.rates, [1.])
        self.assertAlmostEqual(abs(f(0.) - 2.), 0., places=14)

    def test_cancellation(self):
        f = ExpPolyFunction.exp(2., 1.)
        self.assertTrue((f - f).is_zero())

    def test_product(self):
        f = ExpPolyFunction.exp(2., 1.) * ExpPolyFunction([(3., 1, 2.)])
        self.assertEqual(f.terms, [(6., 1, 3.)])

    def test_derivative(self):
        f = ExpPolyFunction([(1.5, 3, 0.7), (2., 0, 0.)])
        h = 1e-6
        for d in (0.5, 1., 3.):
            fd = (f(d + h) - f(d - h)) / (2 * h)
            self.assertAlmostEqual(abs(f.derivative()(d) - fd), 0., places=7)

    def test_invalid_terms(self):
        with self.assertRaises(ValueError):
            ExpPolyFunction([(1., -1, 0.)])
        with self.assertRaises(ValueError):
            ExpPolyFunction([(1., 0, -1.)])

    def test_limit(self):
        f = ExpPolyFunction([(2., 0, 0.), (5., 1, 1.)])
        self.assertEqual(f.limit(), 2.)
        with self.assertRaises(DivergentTermError):
            ExpPolyFunction([(1., 1, 0.)]).limit()
        self.assertEqual(ExpPolyFunction.zero().limit(), 0.)

    def test_docstring_examples(self):
        results = doctest.testmod(avint.exppoly)
        self.assertGreater(results.attempted, 0)
        self.assertEqual(results.failed, 0)


class TestSolveDampedLinear(unittest.TestCase):

    def test_homogeneous(self):
        c = solve_damped_linear(2., ExpPolyFunction.zero(), 3.)
        self.assertEqual(c.terms, [(3., 0, 2.)])

    def test_non_resonant_source(self):
        f = ExpPolyFunction([(1., 2, 0.5), (0.3j, 0, 3.), (2., 0, 0.)])
        c = solve_damped_linear(1.5, f, 0.7)
        self.assertAlmostEqual(abs(c(0.) - 0.7), 0., places=13)
        self.assertLess(residual_of_ode(c, 1.5, f, [0., 0.5, 2., 7.]), 1e-12)

    def test_resonant_source(self):
        # c' = -c - a e^{-delta}  =>  c = (c0 - a delta) e^{-delta}
        a, c0 = 2., 0.5
        c = solve_damped_linear(1., ExpPolyFunction.exp(a, 1.), c0)
        for d in (0., 1., 4.):
            self.assertAlmostEqual(abs(c(d) - (c0 - a * d) * np.exp(-d)), 0., places=13)

    def test_zero_rate(self):
        # resonant coefficient driven by a decaying source converges
        f = ExpPolyFunction([(1., 0, 2.), (1., 1, 1.)])
        c = solve_damped_linear(0., f, 1.)
        self.assertLess(residual_of_ode(c, 0., f, [0., 1., 5.]), 1e-12)
        # integral of e^{-2d} + d e^{-d} over [0, inf) is 1.5
        self.assertAlmostEqual(abs(c.limit() - (1. - 1.5)), 0., places=13)

    def test_zero_rate_constant_source_diverges(self):
        c = solve_damped_linear(0., ExpPolyFunction.constant(1.), 0.)
        with self.assertRaises(DivergentTermError):
            c.limit()

    def test_negative_rate(self):
        with self.assertRaises(ValueError):
            solve_damped_linear(-1., ExpPolyFunction.zero(), 1.)


def test_conditioning_warning():
    with pytest.warns(ConditioningWarning):
        solve_damped_linear(1., ExpPolyFunction.exp(1., 1. + 1e-8), 0.)


@pytest.mark.parametrize('lam', [0., 0.5, 1., 2.])
@pytest.mark.parametrize('s', [0, 1, 3])
def test_ladder(lam, s):
    f = ExpPolyFunction([(1. - 0.5j, s, 1.)])
    c = solve_damped_linear(lam, f, 0.2 + 0.1j)
    assert abs(c(0.) - (0.2 + 0.1j)) < 1e-13
    assert residual_of_ode(c, lam, f, [0., 0.7, 3.]) < 1e-11
