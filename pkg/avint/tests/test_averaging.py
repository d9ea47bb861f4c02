import unittest

import numpy as np
import pytest

from avint.averaging import EvolvingPolynomial, averaging_normal_form, averaging_rhs, differentiate, generator_at, \
    normal_form_limit, sigma, solve_triangular, xi
from avint.complexify import build_theta, to_complex
from avint.data import fetch_model
from avint.error import ResonanceError
from avint.exppoly import ExpPolyFunction
from avint.polyalg import ComplexPolynomial, monomials
from avint.spectrum import ModelSpec, eigenvalues, inner
from avint.verify import oracles, properties


def prepare(name, M):
    spec = fetch_model(name)
    theta = build_theta(spec)
    Hhat_star = to_complex(spec.Hstar, theta)
    ev = solve_triangular(Hhat_star, eigenvalues(spec), M)
    return spec, theta, Hhat_star, ev


class TestOperators(unittest.TestCase):

    def test_sigma(self):
        mu = [-1j]
        self.assertIsNone(sigma(mu, (1, 1)))
        self.assertAlmostEqual(abs(sigma(mu, (2, 1)) + 1j), 0., places=15)   # <mu, beta-alpha> = i
        self.assertAlmostEqual(abs(sigma(mu, (1, 2)) - 1j), 0., places=15)
        self.assertEqual(sigma([2.], (0, 3)), 1.)

    def test_xi_drops_resonant_and_high_degree(self):
        mu = [-1j]
        p = ComplexPolynomial(1, {(2, 2): 1., (3, 1): 1., (4, 1): 1.})
        K = xi(p, mu, 4)
        self.assertEqual(list(K.keys()), [(3, 1)])
        self.assertAlmostEqual(abs(K[(3, 1)] + 1j), 0., places=15)

    def test_xi_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            xi(ComplexPolynomial.zero(2), [-1j], 4)


class TestSolveTriangular(unittest.TestCase):

    def test_zero_nonlinearity(self):
        ev = solve_triangular(ComplexPolynomial.zero(1), [-1j], 4)
        self.assertEqual(len(ev), 0)
        self.assertEqual(len(ev.generator()), 0)
        self.assertTrue(ev.at(3.).is_zero())

    def test_initial_condition(self):
        for name, M in [('elliptic-x3x4', 6), ('elliptic2-cubic', 4), ('focus-cubic', 4), ('hyperbolic-x3', 5)]:
            _, _, Hhat_star, ev = prepare(name, M)
            self.assertLess(properties.initial_condition_residual(ev, Hhat_star), 1e-14, msg=name)

    def test_cubic_decay_law(self):
        for name in ('elliptic-x3', 'elliptic2-cubic', 'focus-cubic'):
            _, _, Hhat_star, ev = prepare(name, 4)
            self.assertLess(properties.decay_law_residual(ev, Hhat_star), 1e-13, msg=name)

    def test_flow_consistency(self):
        for name in ('elliptic-x3x4', 'elliptic2-cubic'):
            _, _, _, ev = prepare(name, 5 if name == 'elliptic-x3x4' else 4)
            self.assertLess(properties.flow_consistency_residual(ev), 1e-10, msg=name)
            self.assertLess(properties.coupling_formula_residual(ev), 1e-10, msg=name)

    def test_differentiate(self):
        _, _, _, ev = prepare('elliptic-x3x4', 5)
        derivative = differentiate(ev)
        self.assertLessEqual(set(derivative.keys()), set(ev.keys()))
        h = 1e-5
        for delta in (0.3, 2.):
            central = (ev.at(delta + h) - ev.at(delta - h)) * (1 / (2 * h))
            self.assertLess((derivative.at(delta) - central).max_abs(), 1e-7)

    def test_averaging_rhs_at_zero(self):
        # at delta=0 the derivative of the nonlinear part is the frozen right-hand side
        _, _, Hhat_star, ev = prepare('elliptic-x3x4', 4)
        rhs = averaging_rhs(Hhat_star, ev.mu, 4)
        self.assertLess((ev.derivative().at(0.) - rhs).max_abs(), 1e-12)

    def test_resonant_model_aborts(self):
        spec = fetch_model('resonant-1-2')
        Hhat_star = to_complex(spec.Hstar, build_theta(spec))
        with self.assertRaises(ResonanceError) as cm:
            solve_triangular(Hhat_star, eigenvalues(spec), 3)
        self.assertEqual(cm.exception.k, (2, -1))

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            solve_triangular(ComplexPolynomial.zero(1), [-1j], 2)
        with self.assertRaises(ValueError):
            solve_triangular(ComplexPolynomial(1, {(1, 1): 1.}), [-1j], 4)
        with self.assertRaises(ValueError):
            solve_triangular(ComplexPolynomial.zero(2), [-1j], 4)

    def test_reality_is_preserved(self):
        for name in ('elliptic-x3x4', 'focus-cubic', 'hyperbolic-x3'):
            _, theta, _, ev = prepare(name, 4)
            residual, consistent = properties.reality_residual(ev, theta)
            self.assertLess(residual, 1e-11, msg=name)
            self.assertTrue(consistent, msg=name)

    def test_generator_decays(self):
        _, _, _, ev = prepare('elliptic-x3', 4)
        fitted, slowest = properties.generator_decay(ev)
        self.assertAlmostEqual(slowest, 1., places=12)
        self.assertGreaterEqual(fitted, 0.9 * slowest)
        self.assertLess(generator_at(ev, ev.mu, 4, 50.).max_abs(), 1e-12)

    def test_generator_slowest_rate(self):
        _, _, _, ev = prepare('elliptic2-cubic', 4)
        self.assertGreaterEqual(ev.generator().slowest_rate(), np.sqrt(2) - 1 - 1e-12)

    def test_ode_oracle(self):
        _, _, Hhat_star, ev = prepare('elliptic-x3x4', 4)
        grid = np.linspace(0., 10., 11)
        trajectories = oracles.ode_coefficient_oracle(Hhat_star, ev.mu, 4, grid, step=1e-3)
        self.assertLess(trajectories.sup_gap(ev), 1e-8)
        self.assertEqual(trajectories.frame.shape[0], 11)


class TestNormalForm(unittest.TestCase):

    def test_quartic_oscillator(self):
        nf, _, _ = averaging_normal_form(fetch_model('elliptic-x4'), 4)
        # I + 3/2 I^2 with I = (x^2+y^2)/2
        self.assertAlmostEqual(nf.action_polynomial[(1, 0)].real, 1., places=9)
        self.assertAlmostEqual(nf.action_polynomial[(2, 0)].real, 1.5, places=9)
        self.assertAlmostEqual(nf.invariant_polynomial[(2, 0)].real, 0.375, places=9)
        self.assertAlmostEqual(nf.N[(4, 0)].real, 0.375, places=9)
        self.assertAlmostEqual(nf.N[(2, 2)].real, 0.75, places=9)
        self.assertLess(nf.reality_residual, 1e-12)

    def test_cubic_oscillator(self):
        nf, _, _ = averaging_normal_form(fetch_model('elliptic-x3'), 4)
        self.assertAlmostEqual(nf.action_polynomial[(2, 0)].real, -15 / 4, places=9)
        self.assertEqual(nf.off_lattice_max(), 0.)

    def test_normal_form_is_in_involution_with_H2(self):
        spec = fetch_model('focus-cubic')
        nf, _, _ = averaging_normal_form(spec, 4)
        for key in nf.N_hat.keys():
            self.assertEqual(key[:2], key[2:])
        self.assertLess(nf.check_invariant_expression(), 1e-10)

    def test_zero_nonlinearity(self):
        spec = ModelSpec(omega=[1.])
        nf, ev, _ = averaging_normal_form(spec, 4)
        self.assertTrue(nf.N_hat.is_zero())
        self.assertLess((nf.N - spec.H2).max_abs(), 1e-15)

    def test_limit_rejects_divergence(self):
        spec = fetch_model('elliptic-x3')
        ev = EvolvingPolynomial(1, 4, [-1j], {(2, 2): ExpPolyFunction([(1., 1, 0.)])})
        with self.assertRaises(ArithmeticError):
            normal_form_limit(ev, spec)


@pytest.mark.parametrize('name,M', [
    ('elliptic-x3x4', 6), ('elliptic2-cubic', 4), ('focus-cubic', 4), ('hyperbolic-x3', 4), ('elliptic-x3', 5)
])
def test_cross_oracle(name, M):
    spec = fetch_model(name)
    nf, _, _ = averaging_normal_form(spec, M)
    birkhoff = oracles.birkhoff_oracle(spec, M)
    assert properties.cross_oracle_residual(nf, birkhoff) < 1e-9


def test_divisor_inner():
    mu = [-1j, -1j * np.sqrt(2)]
    for key in monomials(2, 3):
        d = inner(mu, key)
        expected = sum(mu[j] * (key[2 + j] - key[j]) for j in range(2))
        assert abs(d - expected) < 1e-15
