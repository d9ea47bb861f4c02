import unittest

import numpy as np
import pytest

from avint.complexify import build_theta, conj_theta, conj_theta_coefficients, is_theta_real, to_complex, to_real
from avint.data import BUILTIN_MODELS, fetch_model
from avint.data.models import random_cubic
from avint.polyalg import ComplexPolynomial
from avint.spectrum import eigenvalues


def H2_hat(mu):
    n = len(mu)
    return ComplexPolynomial(n, {tuple(int(i == j or i == n + j) for i in range(2 * n)): mu[j] for j in range(n)})


@pytest.mark.parametrize('name', BUILTIN_MODELS)
def test_theta_is_symplectic_and_invertible(name):
    theta = build_theta(fetch_model(name))
    assert theta.inversion_residual() < 1e-15
    assert theta.symplectic_residual() < 1e-14


@pytest.mark.parametrize('name', BUILTIN_MODELS)
def test_quadratic_part_is_diagonalized(name):
    spec = fetch_model(name)
    theta = build_theta(spec)
    assert (to_complex(spec.H2, theta) - H2_hat(eigenvalues(spec))).max_abs() < 1e-14


@pytest.mark.parametrize('name', BUILTIN_MODELS)
def test_real_polynomials_are_theta_real(name):
    spec = fetch_model(name)
    theta = build_theta(spec)
    p_hat = to_complex(spec.Hstar + random_cubic(spec.n, seed=1), theta)
    check = is_theta_real(p_hat, theta)
    assert check.is_real
    assert check.consistent
    assert bool(check)


class TestComplexification(unittest.TestCase):

    def test_roundtrip(self):
        spec = fetch_model('focus-cubic')
        theta = build_theta(spec)
        p = random_cubic(2, seed=3) + random_cubic(2, seed=4) * ComplexPolynomial.variable(2, 0)
        self.assertLess((to_real(to_complex(p, theta), theta) - p).max_abs(), 1e-12)

    def test_conj_theta_two_ways(self):
        for name in ('elliptic2-cubic', 'focus-cubic'):
            spec = fetch_model(name)
            theta = build_theta(spec)
            rng = np.random.default_rng(5)
            p_hat = to_complex(random_cubic(2, seed=6), theta) * complex(rng.normal(), rng.normal())
            direct = conj_theta(p_hat, theta)
            by_coefficients = conj_theta_coefficients(p_hat, theta)
            self.assertLess((direct - by_coefficients).max_abs(), 1e-13, msg=name)

    def test_python_scalars(self):
        spec = fetch_model('elliptic2-cubic')
        theta = build_theta(spec)
        p_hat = to_complex(spec.Hstar, theta)
        self.assertTrue(all(type(c) is complex for c in conj_theta_coefficients(p_hat, theta).terms.values()))
        check = is_theta_real(p_hat, theta)
        for value in (check.residual, check.residual_direct, check.tol):
            self.assertIs(type(value), float)
        self.assertIs(type(check.is_real), bool)

    def test_complex_multiple_is_not_real(self):
        for name in ('elliptic-x3', 'hyperbolic-x3', 'focus-cubic'):
            spec = fetch_model(name)
            theta = build_theta(spec)
            check = is_theta_real(to_complex(spec.Hstar, theta) * 1j, theta)
            self.assertFalse(check.is_real, msg=name)
            self.assertTrue(check.consistent, msg=name)

    def test_elliptic_coordinates(self):
        theta = build_theta(fetch_model('elliptic-x3'))
        # x = (z - i w)/sqrt(2)
        x_hat = to_complex(ComplexPolynomial.variable(1, 0), theta)
        self.assertAlmostEqual(abs(x_hat[(1, 0)] - 1 / np.sqrt(2)), 0., places=15)
        self.assertAlmostEqual(abs(x_hat[(0, 1)] + 1j / np.sqrt(2)), 0., places=15)

    def test_dimension_mismatch(self):
        theta = build_theta(fetch_model('elliptic-x3'))
        with self.assertRaises(ValueError):
            is_theta_real(ComplexPolynomial.variable(2, 0), theta)
