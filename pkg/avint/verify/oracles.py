"""
Oracles independent of the closed-form averaging solver: the classical Birkhoff normal form by Lie series, and the
numerical integration of the averaging coefficient system.
"""

import numpy as np
import pandas as pd

import avint as av
from avint.averaging import NormalForm, sigma
from avint.complexify import build_theta, to_complex
from avint.error import max_abs
from avint.polyalg import ComplexPolynomial, bracket_monomials, key_label, monomials, poisson_bracket, split_key
from avint.spectrum import check_nonresonant, eigenvalues, inner


def lie_transform(h: ComplexPolynomial, chi: ComplexPolynomial, M):
    """
    :math:`\\exp(\\mathrm{ad}_\\chi)h=\\sum_k\\mathrm{ad}_\\chi^kh/k!` truncated at degree `M`, with
    :math:`\\mathrm{ad}_\\chi h=\\{\\chi,h\\}`. The series is finite when :math:`\\chi` has minimal degree at least 3.
    """
    if chi.is_zero():
        return h.truncate(M)
    result = h.truncate(M)
    term = result
    k = 1
    while True:
        term = poisson_bracket(chi, term).truncate(M) * (1. / k)
        if term.is_zero():
            break
        result = result + term
        k += 1
    return result


def birkhoff_oracle(spec, M, divisor_tol=None):
    """
    Classical Birkhoff normal form of order `M` by Lie series: at every degree `d=3..M`, the generator
    :math:`\\chi_d=-\\sum_{\\alpha\\neq\\beta}h_{\\alpha,\\beta}/\\langle\\mu,\\beta-\\alpha\\rangle\\,z^\\alpha w^\\beta` solves the
    homological equation and the Hamiltonian is transformed by :math:`\\exp(\\mathrm{ad}_{\\chi_d})`.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :param M: the working order
    :param divisor_tol: if None, `avint.environ['DIVISOR_TOL']` is used
    :return: a :class:`avint.averaging.NormalForm`
    """
    divisor_tol = av._get_tol('DIVISOR_TOL', divisor_tol)
    mu = eigenvalues(spec)
    check_nonresonant(mu, M, divisor_tol=divisor_tol)
    theta = build_theta(spec)
    n = spec.n
    H2_hat = ComplexPolynomial._build(n, {tuple(int(i == j or i == n + j) for i in range(2 * n)): mu[j]
                                          for j in range(n)})
    h = (H2_hat + to_complex(spec.Hstar, theta)).truncate(M)
    for d in range(3, M + 1):
        chi = {}
        for key, c in h.homogeneous(d).items():
            alpha, beta = split_key(key)
            if alpha == beta:
                continue
            chi[key] = -c / inner(mu, key)
        h = lie_transform(h, ComplexPolynomial._build(n, chi), M)
    N_hat = (h - H2_hat).filter(lambda key: sum(key) >= 3)
    N_hat = N_hat.filter(lambda key: split_key(key)[0] == split_key(key)[1])
    return NormalForm(N_hat, spec, M, theta)


class CoefficientTrajectories:
    """
    Coefficients of the averaging system sampled on a grid of averaging times.

    :param keys: list of bi-index keys (one column each)
    :param deltas: np.ndarray of sampling times
    :param values: complex np.ndarray of shape `(len(deltas), len(keys))`
    """

    def __init__(self, keys, deltas, values):
        self.keys = list(keys)
        self.deltas = np.asarray(deltas, dtype=float)
        self.values = np.asarray(values, dtype=complex)

    @property
    def frame(self):
        """pd.DataFrame indexed by delta, one column per monomial"""
        return pd.DataFrame(self.values, index=pd.Index(self.deltas, name='delta'),
                            columns=[key_label(k) for k in self.keys])

    def sup_gap(self, ev):
        """
        Largest deviation from the closed-form solution.

        :param ev: an :class:`avint.averaging.EvolvingPolynomial`
        :return: float
        """
        closed = np.asarray([[ev[k](d) for k in self.keys] for d in self.deltas], dtype=complex)
        return max_abs(closed.reshape(self.values.shape), self.values)


def ode_coefficient_oracle(Hhat_star: ComplexPolynomial, mu, M, delta_grid, step=1e-3, divisor_tol=None):
    """
    Integrates the finite coefficient system of continuous averaging,
    :math:`c_{\\alpha,\\beta}'=-\\rho\\,|\\langle\\mu,\\beta-\\alpha\\rangle|c_{\\alpha,\\beta}-\\{\\hat\\xi\\hat{\\mathcal H}_*,\\hat{\\mathcal H}_*\\}_{\\alpha,\\beta}`
    over all monomials of degree `3..M`, with the classical fixed-step 4th-order Runge-Kutta scheme.

    :param Hhat_star: nonlinear part in complex coordinates
    :param mu: eigenvalue vector
    :param M: the working order
    :param delta_grid: nonnegative sampling times; each is rounded to the nearest multiple of `step`
    :param step: the integration step
    :param divisor_tol: if None, `avint.environ['DIVISOR_TOL']` is used
    :return: a :class:`CoefficientTrajectories`
    """
    mu = np.asarray(mu, dtype=complex)
    n = Hhat_star.n
    keys = [k for d in range(3, M + 1) for k in monomials(n, d)]
    index = {k: i for i, k in enumerate(keys)}
    rates = np.asarray([0. if split_key(k)[0] == split_key(k)[1] else abs(inner(mu, k)) for k in keys])

    out_idx, i1, i2, weight = [], [], [], []
    for key1 in keys:
        s = sigma(mu, key1, divisor_tol)
        if s is None:
            continue
        for key2 in keys:
            if sum(key1) + sum(key2) - 2 > M:
                continue
            for key, factor in bracket_monomials(key1, key2):
                out_idx.append(index[key])
                i1.append(index[key1])
                i2.append(index[key2])
                weight.append(s * factor)
    out_idx, i1, i2 = np.asarray(out_idx, dtype=int), np.asarray(i1, dtype=int), np.asarray(i2, dtype=int)
    weight = np.asarray(weight, dtype=complex)
    size = len(keys)

    def rhs(c):
        prod = weight * c[i1] * c[i2]
        source = np.bincount(out_idx, weights=prod.real, minlength=size) \
            + 1j * np.bincount(out_idx, weights=prod.imag, minlength=size)
        return -rates * c - source

    c = np.asarray([Hhat_star[k] for k in keys], dtype=complex)
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(delta_grid < 0):
        raise ValueError('the sampling times must be nonnegative')
    targets = np.rint(delta_grid / step).astype(int)
    wanted = set(targets.tolist())
    samples = {}
    for i in range(int(targets.max(initial=0)) + 1):
        if i in wanted and i not in samples:
            samples[i] = c.copy()
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * step * k1)
        k3 = rhs(c + 0.5 * step * k2)
        k4 = rhs(c + step * k3)
        c = c + (step / 6.) * (k1 + 2 * k2 + 2 * k3 + k4)
    values = np.asarray([samples[t] for t in targets]) if len(targets) else np.zeros((0, size))
    return CoefficientTrajectories(keys, targets * step, values)
