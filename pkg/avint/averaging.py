"""
Continuous averaging in complex coordinates. The nonlinear part :math:`\\hat{\\mathcal H}_*(\\delta)` evolves as

.. math::
    \\partial_\\delta\\hat{\\mathcal H}_* = -\\{\\hat\\xi\\hat{\\mathcal H}_*, \\hat H_2+\\hat{\\mathcal H}_*\\}
    \\quad\\text{(truncated at degree M)},

where :math:`\\hat\\xi` multiplies the coefficient of :math:`z^\\alpha w^\\beta` by
:math:`\\sigma_{\\alpha,\\beta}=|\\langle\\mu,\\beta-\\alpha\\rangle|/\\langle\\mu,\\beta-\\alpha\\rangle`. Coefficient-wise this
is a triangular system that is solved degree by degree in closed form; the non-resonant coefficients decay
exponentially and the resonant ones (:math:`\\alpha=\\beta`) converge to the Birkhoff normal form.
"""

from collections import defaultdict
from functools import cached_property

import numpy as np
from tqdm import tqdm

import avint as av
from avint.complexify import build_theta, to_real, to_complex
from avint.error import DivergentTermError
from avint.exppoly import ExpPolyFunction, solve_damped_linear
from avint.polyalg import ComplexPolynomial, bracket_monomials, compose, key_degree, split_key, poisson_bracket
from avint.spectrum import check_nonresonant, eigenvalues, quadratic_invariants, inner, FOCUS, ELLIPTIC


def sigma(mu, key, divisor_tol=None):
    """
    The modulus-one factor :math:`\\sigma_{\\alpha,\\beta}=|\\langle\\mu,\\beta-\\alpha\\rangle|/\\langle\\mu,\\beta-\\alpha\\rangle`,
    or None when the divisor is below `divisor_tol` (resonant monomial).
    """
    divisor_tol = av._get_tol('DIVISOR_TOL', divisor_tol)
    d = inner(mu, key)
    if abs(d) < divisor_tol:
        return None
    return abs(d) / d


def xi(p_hat: ComplexPolynomial, mu, M, divisor_tol=None):
    """
    The averaging operator :math:`\\hat\\xi`: multiplies every coefficient by :math:`\\sigma_{\\alpha,\\beta}` and drops the
    terms of degree larger than `M` and the resonant ones (:math:`\\langle\\mu,\\beta-\\alpha\\rangle=0` within
    `divisor_tol`).

    :param p_hat: a :class:`avint.polyalg.ComplexPolynomial` in complex coordinates
    :param mu: eigenvalue vector
    :param M: the working order
    :param divisor_tol: if None, `avint.environ['DIVISOR_TOL']` is used
    :return: a :class:`avint.polyalg.ComplexPolynomial`
    """
    if len(mu) != p_hat.n:
        raise ValueError(f'dimension mismatch: polynomial n={p_hat.n} vs. {len(mu)} eigenvalues')
    terms = {}
    for key, coef in p_hat.items():
        if key_degree(key) > M:
            continue
        s = sigma(mu, key, divisor_tol)
        if s is not None:
            terms[key] = s * coef
    return ComplexPolynomial._build(p_hat.n, terms)


class EvolvingPolynomial:
    """
    A polynomial whose coefficients are functions of :math:`\\delta` in the exp-polynomial class, i.e., a map from
    bi-index keys to :class:`avint.exppoly.ExpPolyFunction`.

    :param n: degrees of freedom
    :param M: the working order
    :param mu: eigenvalue vector
    :param coeffs: dict from keys to :class:`avint.exppoly.ExpPolyFunction`
    :param divisor_tol: resonance threshold used to derive the generator; if None, `avint.environ['DIVISOR_TOL']`
    """

    def __init__(self, n, M, mu, coeffs, divisor_tol=None):
        self.n = n
        self.M = M
        self.mu = np.asarray(mu, dtype=complex)
        self.divisor_tol = av._get_tol('DIVISOR_TOL', divisor_tol)
        self.coeffs = {k: f for k, f in sorted(coeffs.items(), key=lambda kf: (sum(kf[0]), kf[0])) if not f.is_zero()}

    def __len__(self):
        return len(self.coeffs)

    def items(self):
        return self.coeffs.items()

    def keys(self):
        return self.coeffs.keys()

    def __getitem__(self, key):
        return self.coeffs.get(tuple(key), ExpPolyFunction.zero())

    @cached_property
    def _compiled(self):
        keys = list(self.coeffs.keys())
        idx, c, s, nu = [], [], [], []
        for i, key in enumerate(keys):
            for ci, si, nui in self.coeffs[key].terms:
                idx.append(i)
                c.append(ci)
                s.append(si)
                nu.append(nui)
        return keys, np.asarray(idx, dtype=int), np.asarray(c, dtype=complex), \
            np.asarray(s, dtype=float), np.asarray(nu, dtype=float)

    @property
    def key_list(self):
        return self._compiled[0]

    def coefficient_values(self, delta):
        """
        Values of all coefficients at :math:`\\delta`, in the order of :attr:`key_list`.

        :param delta: a real number
        :return: np.ndarray of complex
        """
        keys, idx, c, s, nu = self._compiled
        values = np.zeros(len(keys), dtype=complex)
        np.add.at(values, idx, c * delta ** s * np.exp(-nu * delta))
        return values

    def at(self, delta):
        """
        The polynomial at time :math:`\\delta`.

        :param delta: a real number, :math:`\\delta\\ge0`
        :return: a :class:`avint.polyalg.ComplexPolynomial`
        """
        values = self.coefficient_values(delta)
        return ComplexPolynomial._build(self.n, dict(zip(self.key_list, values)))

    __call__ = at

    def derivative(self):
        """Term-wise :math:`\\delta`-derivative"""
        return EvolvingPolynomial(self.n, self.M, self.mu, {k: f.derivative() for k, f in self.coeffs.items()},
                                  self.divisor_tol)

    def generator(self):
        """
        The closed-form generator :math:`\\hat K(\\delta)=\\hat\\xi\\hat{\\mathcal H}_*(\\delta)`, as an
        :class:`EvolvingPolynomial`.
        """
        coeffs = {}
        for key, f in self.coeffs.items():
            if key_degree(key) > self.M:
                continue
            s = sigma(self.mu, key, self.divisor_tol)
            if s is not None:
                coeffs[key] = f.scale(s)
        return EvolvingPolynomial(self.n, self.M, self.mu, coeffs, self.divisor_tol)

    def transform(self, image_of, n_out=None):
        """
        Applies a linear map defined on monomials: the result has coefficients
        :math:`\\sum_{key} f_{key}(\\delta)\\,[\\mathrm{image\\_of}(key)]_{k'}`.

        :param image_of: callable mapping a key to a :class:`avint.polyalg.ComplexPolynomial` (the image of the unit
            monomial)
        :param n_out: degrees of freedom of the images (defaults to `n`)
        :return: an :class:`EvolvingPolynomial`
        """
        accum = defaultdict(list)
        for key, f in self.coeffs.items():
            for k_out, c in image_of(key).items():
                accum[k_out].extend((c * ci, si, nui) for ci, si, nui in f.terms)
        n_out = self.n if n_out is None else n_out
        return EvolvingPolynomial(n_out, self.M, self.mu, {k: ExpPolyFunction(t) for k, t in accum.items()},
                                  self.divisor_tol)

    def slowest_rate(self):
        """Smallest positive rate among the coefficients (`np.inf` if there is none)"""
        rates = [nu for f in self.coeffs.values() for nu in f.rates if nu > 0]
        return min(rates, default=np.inf)

    def __repr__(self):
        return f'EvolvingPolynomial(n={self.n}, M={self.M}, n_coefficients={len(self.coeffs)})'


def solve_triangular(Hhat_star: ComplexPolynomial, mu, M, divisor_tol=None, verbose=False):
    """
    Solves the coefficient system of continuous averaging in closed form. Degrees `d=3..M` are processed in ascending
    order: the source :math:`\\{\\hat\\xi\\hat{\\mathcal H}_*,\\hat{\\mathcal H}_*\\}_{\\alpha,\\beta}` of each degree-`d`
    coefficient only involves coefficients of lower degree, and is assembled by lifting the Poisson bracket to
    exp-polynomial coefficients. Each coefficient then solves
    :math:`c'=-|\\langle\\mu,\\beta-\\alpha\\rangle|c-\\mathrm{source}`, :math:`c(0)=\\hat H_{\\alpha,\\beta}`.

    :param Hhat_star: nonlinear part in complex coordinates (minimal degree at least 3)
    :param mu: eigenvalue vector
    :param M: the working order, `M >= 3`
    :param divisor_tol: if None, `avint.environ['DIVISOR_TOL']` is used
    :param verbose: show a progress bar over the degrees
    :return: an :class:`EvolvingPolynomial`
    """
    if M < 3:
        raise ValueError(f'the working order must be at least 3 (found M={M})')
    if Hhat_star.min_degree() < 3:
        raise ValueError(f'the nonlinear part must vanish to order 3 (found degree {Hhat_star.min_degree()})')
    mu = np.asarray(mu, dtype=complex)
    if len(mu) != Hhat_star.n:
        raise ValueError(f'dimension mismatch: polynomial n={Hhat_star.n} vs. {len(mu)} eigenvalues')
    divisor_tol = av._get_tol('DIVISOR_TOL', divisor_tol)
    check_nonresonant(mu, M, divisor_tol=divisor_tol)

    initial = Hhat_star.truncate(M)
    solved = {}               # degree -> list of (key, ExpPolyFunction)
    generator = {}            # degree -> list of (key, sigma * ExpPolyFunction)
    coeffs = {}

    degrees = range(3, M + 1)
    for d in (tqdm(degrees, desc='[solve_triangular]') if verbose else degrees):
        source = defaultdict(list)
        for d1 in range(3, d):
            d2 = d + 2 - d1
            if not 3 <= d2 < d:
                continue
            for key1, k1 in generator.get(d1, []):
                for key2, c2 in solved.get(d2, []):
                    contributions = bracket_monomials(key1, key2)
                    if not contributions:
                        continue
                    product = (k1 * c2).terms
                    for key, factor in contributions:
                        source[key].extend((factor * c, s, nu) for c, s, nu in product)

        keys = set(initial.homogeneous(d).keys()) | set(source.keys())
        solved[d], generator[d] = [], []
        for key in sorted(keys):
            divisor = inner(mu, key)
            alpha, beta = split_key(key)
            rate = 0. if alpha == beta else abs(divisor)
            c = solve_damped_linear(rate, ExpPolyFunction(source.get(key, [])), initial[key])
            if c.is_zero():
                continue
            coeffs[key] = c
            solved[d].append((key, c))
            s = sigma(mu, key, divisor_tol)
            if s is not None:
                generator[d].append((key, c.scale(s)))

    return EvolvingPolynomial(Hhat_star.n, M, mu, coeffs, divisor_tol)


def differentiate(ev: EvolvingPolynomial):
    """Term-wise :math:`\\delta`-derivative of an :class:`EvolvingPolynomial`"""
    return ev.derivative()


def averaging_rhs(H_at_delta: ComplexPolynomial, mu, M, divisor_tol=None):
    """
    Right-hand side :math:`-\\{\\hat\\xi\\hat{\\mathcal H}_*,\\hat H_2+\\hat{\\mathcal H}_*\\}` truncated at degree `M`,
    evaluated on a frozen polynomial.

    :param H_at_delta: the nonlinear part at some :math:`\\delta`, in complex coordinates
    :param mu: eigenvalue vector
    :param M: the working order
    :return: a :class:`avint.polyalg.ComplexPolynomial`
    """
    n = H_at_delta.n
    H2_hat = ComplexPolynomial._build(n, {tuple(int(i == j or i == n + j) for i in range(2 * n)): mu[j] for j in range(n)})
    K = xi(H_at_delta, mu, M, divisor_tol)
    return (-poisson_bracket(K, H2_hat + H_at_delta)).truncate(M)


def coupling_source(values: ComplexPolynomial, mu, M, key, divisor_tol=None):
    """
    Coefficient of :math:`z^\\alpha w^\\beta` in :math:`\\{\\hat\\xi\\hat{\\mathcal H}_*,\\hat{\\mathcal H}_*\\}` computed by the
    explicit coupling formula

    .. math::
        \\sum_{(\\alpha',\\beta')}\\sum_j\\sigma_{\\alpha',\\beta'}\\left(\\beta'_j(\\alpha_j+1)-\\alpha'_j(\\beta_j+1)\\right)
        \\hat{\\mathcal H}_{\\alpha',\\beta'}\\hat{\\mathcal H}_{\\alpha+e_j-\\alpha',\\beta+e_j-\\beta'},

    the sum running over the non-resonant monomials of degree in `(2, M]`. Used as an independent check of the lifted
    bracket.

    :param values: the nonlinear part at some :math:`\\delta`, in complex coordinates
    :param mu: eigenvalue vector
    :param M: the working order
    :param key: the target bi-index key
    :return: complex
    """
    n = values.n
    alpha, beta = split_key(tuple(key))
    total = 0j
    for key1, c1 in values.items():
        if not 2 < key_degree(key1) <= M:
            continue
        s = sigma(mu, key1, divisor_tol)
        if s is None:
            continue
        a1, b1 = split_key(key1)
        for j in range(n):
            factor = b1[j] * (alpha[j] + 1) - a1[j] * (beta[j] + 1)
            if factor == 0:
                continue
            a2 = [alpha[i] + (i == j) - a1[i] for i in range(n)]
            b2 = [beta[i] + (i == j) - b1[i] for i in range(n)]
            if min(a2 + b2) < 0:
                continue
            total += s * factor * c1 * values[tuple(a2) + tuple(b2)]
    return total


class NormalForm:
    """
    A partial Birkhoff normal form of order `M`.

    :param N_hat: the nonlinear part of the normal form in complex coordinates (only monomials with
        :math:`\\alpha=\\beta`)
    :param spec: the :class:`avint.spectrum.ModelSpec` it normalizes
    :param M: the working order
    :param theta: the :class:`avint.complexify.ThetaMap` of the model (built if None)
    """

    def __init__(self, N_hat: ComplexPolynomial, spec, M, theta=None):
        self.N_hat = N_hat
        self.spec = spec
        self.M = M
        self.theta = build_theta(spec) if theta is None else theta
        self.mu = eigenvalues(spec)
        N_real = to_real(N_hat, self.theta)
        self.reality_residual = N_real.imag_max()
        self.N = spec.H2 + N_real.real()
        self.quadratics = quadratic_invariants(spec)

    @property
    def H2_hat(self):
        n = self.spec.n
        return ComplexPolynomial._build(n, {tuple(int(i == j or i == n + j) for i in range(2 * n)): self.mu[j]
                                            for j in range(n)})

    def off_lattice_max(self):
        """Largest coefficient of :math:`\\hat N` at a monomial with :math:`\\alpha\\neq\\beta`"""
        return max((abs(c) for k, c in self.N_hat.items() if split_key(k)[0] != split_key(k)[1]), default=0.)

    def __call__(self, point):
        """Value of the real normal form (quadratic part included) at a point, or a batch of points"""
        return np.real(self.N(point))

    def _product_images(self, scale_elliptic=1.):
        # images of the products z_j w_j in terms of the quadratic invariants (placed in the alpha slots)
        n = self.spec.n
        q = [ComplexPolynomial.variable(n, i) for i in range(n)]
        images = []
        for j in range(n):
            block = self.spec.block_of(j)
            if block == FOCUS:
                p = j - j % 2
                sign = 1j if j % 2 == 0 else -1j
                images.append((q[p] + sign * q[p + 1]) * 0.5)
            elif block == ELLIPTIC:
                images.append(q[j] * (0.5j * scale_elliptic))
            else:
                images.append(q[j])
        return images + [ComplexPolynomial.zero(n)] * n

    def _reduced(self):
        # N_hat + H2_hat written in the products u_j = z_j w_j
        n = self.spec.n
        terms = {}
        for key, c in (self.H2_hat + self.N_hat).items():
            alpha, beta = split_key(key)
            if alpha != beta:
                continue
            terms[alpha + (0,) * n] = c
        return ComplexPolynomial._build(n, terms)

    @cached_property
    def invariant_polynomial(self):
        """
        The normal form (quadratic part included) as a polynomial in the quadratic first integrals of
        :meth:`avint.spectrum.quadratic_invariants`, stored with the `k`-th invariant as the `k`-th position
        variable.
        """
        return compose(self._reduced(), self._product_images()).real()

    @cached_property
    def action_polynomial(self):
        """
        As :attr:`invariant_polynomial`, but with the elliptic invariants replaced by the actions
        :math:`I_k=(x_k^2+y_k^2)/2`.
        """
        return compose(self._reduced(), self._product_images(scale_elliptic=2.)).real()

    def check_invariant_expression(self):
        """
        Substitutes the quadratic invariants into :attr:`invariant_polynomial` and compares with :attr:`N`.

        :return: float, the largest coefficient deviation
        """
        n = self.spec.n
        images = list(self.quadratics) + [ComplexPolynomial.zero(n)] * n
        return (compose(self.invariant_polynomial, images) - self.N).max_abs()

    def __repr__(self):
        return f'NormalForm(M={self.M}, N={self.N.pretty(names=("x", "y"))})'


def normal_form_limit(ev: EvolvingPolynomial, spec, theta=None, divergence_tol=None):
    """
    The :math:`\\delta\\to+\\infty` limit of the evolving nonlinear part.

    :param ev: an :class:`EvolvingPolynomial` from :meth:`solve_triangular`
    :param spec: the :class:`avint.spectrum.ModelSpec`
    :param theta: the :class:`avint.complexify.ThetaMap` (built if None)
    :param divergence_tol: see :meth:`avint.exppoly.ExpPolyFunction.limit`
    :return: a :class:`NormalForm`
    """
    divergence_tol = av._get_tol('DIVERGENCE_TOL', divergence_tol)
    terms = {}
    for key, f in ev.items():
        limit = f.limit(divergence_tol)
        if limit == 0:
            continue
        alpha, beta = split_key(key)
        if alpha != beta:
            if abs(limit) > divergence_tol:
                raise DivergentTermError(f'non-vanishing limit {limit:.3e} at the non-resonant monomial {key}')
            continue
        terms[key] = limit
    return NormalForm(ComplexPolynomial._build(ev.n, terms), spec, ev.M, theta)


def generator_at(ev: EvolvingPolynomial, mu, M, delta, divisor_tol=None):
    """
    The generator :math:`\\hat K(\\delta)=\\hat\\xi\\hat{\\mathcal H}_*(\\delta)` in complex coordinates.
    """
    if delta < 0:
        raise ValueError(f'delta must be nonnegative (found {delta})')
    return xi(ev.at(delta), mu, M, divisor_tol)


def averaging_normal_form(spec, M, verbose=False):
    """
    Convenience pipeline: complexifies the model, solves the averaging system and takes the limit.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :param M: the working order
    :param verbose: show progress
    :return: a tuple `(NormalForm, EvolvingPolynomial, ThetaMap)`
    """
    theta = build_theta(spec)
    mu = eigenvalues(spec)
    ev = solve_triangular(to_complex(spec.Hstar, theta), mu, M, verbose=verbose)
    return normal_form_limit(ev, spec, theta), ev, theta
