import warnings
from functools import cached_property

import numpy as np
import pandas as pd

import avint as av
from avint.error import ModelFormatError, ResonanceError, ConditioningWarning
from avint.functional import reachable_vectors
from avint.polyalg import ComplexPolynomial


FOCUS, ELLIPTIC, HYPERBOLIC = 'focus', 'elliptic', 'hyperbolic'


class ModelSpec:
    """
    Description of a polynomial Hamiltonian :math:`H=H_2+H_*` with an equilibrium at the origin, whose quadratic part is
    already in block form. Variables are ordered as :math:`(x_1..x_n,y_1..y_n)`; the indices `0..2*n1-1` hold the
    `n1` focus pairs, `2*n1..n2-1` the elliptic degrees of freedom, and `n2..n-1` the hyperbolic ones:

    .. math::
        H_2 = \\sum_j \\left(-a_j(y_{2j-1}x_{2j-1}+y_{2j}x_{2j}) + b_j(y_{2j-1}x_{2j}-y_{2j}x_{2j-1})\\right)
            + \\sum_k \\frac{\\omega_k}{2}(x_k^2+y_k^2) + \\sum_l \\lambda_l x_ly_l

    All violations of the model invariants are collected and raised together as a
    :class:`avint.error.ModelFormatError`.

    :param n1: number of focus pairs
    :param n2: index bound of the elliptic block (`2*n1 <= n2 <= n`)
    :param n: degrees of freedom
    :param a: sequence of `n1` reals (focus damping)
    :param b: sequence of `n1` reals (focus rotation)
    :param omega: sequence of `n2-2*n1` nonzero reals (elliptic frequencies)
    :param lam: sequence of `n-n2` nonzero reals (hyperbolic exponents)
    :param Hstar: a real :class:`avint.polyalg.ComplexPolynomial` in real coordinates with minimal degree 3 (or a dict
        from keys to coefficients); if None, :math:`H_*=0`
    :param name: optional name of the model (used in reports)
    """

    def __init__(self, n1=0, n2=None, n=None, a=(), b=(), omega=(), lam=(), Hstar=None, name=None):
        omega, lam = tuple(float(w) for w in omega), tuple(float(l) for l in lam)
        if n is None:
            n = 2 * n1 + len(omega) + len(lam)
        if n2 is None:
            n2 = 2 * n1 + len(omega)
        self.n1, self.n2, self.n = int(n1), int(n2), int(n)
        self.a, self.b = tuple(float(ai) for ai in a), tuple(float(bi) for bi in b)
        self.omega, self.lam = omega, lam
        if Hstar is None:
            Hstar = ComplexPolynomial.zero(max(self.n, 0))
        elif isinstance(Hstar, dict):
            Hstar = ComplexPolynomial(self.n, Hstar)
        self.Hstar = Hstar
        self.name = name

        violations = self.violations()
        if violations:
            raise ModelFormatError(violations)

    def violations(self):
        """
        Lists every broken model invariant (empty if the model is valid).

        :return: list of str
        """
        out = []
        if self.n < 1:
            out.append(f'the number of degrees of freedom must be positive (found n={self.n})')
        if not (0 <= 2 * self.n1 <= self.n2 <= self.n):
            out.append(f'block bounds must satisfy 0 <= 2*n1 <= n2 <= n (found n1={self.n1}, n2={self.n2}, n={self.n})')
        if len(self.a) != self.n1 or len(self.b) != self.n1:
            out.append(f'expected {self.n1} focus blocks, found len(a)={len(self.a)}, len(b)={len(self.b)}')
        if len(self.omega) != self.n2 - 2 * self.n1:
            out.append(f'expected {self.n2 - 2*self.n1} elliptic frequencies, found {len(self.omega)}')
        if len(self.lam) != self.n - self.n2:
            out.append(f'expected {self.n - self.n2} hyperbolic exponents, found {len(self.lam)}')
        for j, (aj, bj) in enumerate(zip(self.a, self.b)):
            if aj == 0 and bj == 0:
                out.append(f'degenerate focus block {j}: (a, b) = (0, 0)')
        for k, w in enumerate(self.omega):
            if w == 0:
                out.append(f'degenerate elliptic frequency omega[{k}] = 0')
        for l, lam in enumerate(self.lam):
            if lam == 0:
                out.append(f'degenerate hyperbolic exponent lambda[{l}] = 0')
        if not np.all(np.isfinite(self.a + self.b + self.omega + self.lam)):
            out.append('non-finite block parameters')
        if not isinstance(self.Hstar, ComplexPolynomial):
            out.append(f'Hstar must be a ComplexPolynomial (found {type(self.Hstar).__name__})')
        else:
            if self.Hstar.n != self.n:
                out.append(f'Hstar has n={self.Hstar.n}, expected n={self.n}')
            if self.Hstar.min_degree() < 3:
                out.append(f'Hstar must vanish to order 3 at the origin (found a term of degree '
                           f'{self.Hstar.min_degree()})')
            if self.Hstar.imag_max() > av.environ['ZERO_TOL'] * max(1., self.Hstar.max_abs()):
                out.append('Hstar must have real coefficients')
        return out

    def block_of(self, i):
        """
        Block containing the `i`-th degree of freedom (0-based).

        :param i: int in `[0, n)`
        :return: one of 'focus', 'elliptic', 'hyperbolic'
        """
        if not 0 <= i < self.n:
            raise ValueError(f'degree of freedom {i} out of range for n={self.n}')
        if i < 2 * self.n1:
            return FOCUS
        if i < self.n2:
            return ELLIPTIC
        return HYPERBOLIC

    @cached_property
    def H2(self):
        return build_H2(self)

    @cached_property
    def H(self):
        return self.H2 + self.Hstar

    @property
    def mu(self):
        return eigenvalues(self)

    def with_Hstar(self, Hstar, name=None):
        """Returns a copy of this model with a different nonlinear part"""
        return ModelSpec(self.n1, self.n2, self.n, self.a, self.b, self.omega, self.lam, Hstar,
                         name=name or self.name)

    def __repr__(self):
        name = f'{self.name!r}, ' if self.name else ''
        return (f'ModelSpec({name}n1={self.n1}, n2={self.n2}, n={self.n}, a={self.a}, b={self.b}, '
                f'omega={self.omega}, lam={self.lam}, deg(Hstar)={self.Hstar.degree})')


def eigenvalues(spec: ModelSpec):
    """
    Eigenvalue vector :math:`\\mu` of the quadratic part:
    :math:`\\mu_{2j-1}=-a_j-ib_j,\\ \\mu_{2j}=-a_j+ib_j` (focus), :math:`\\mu_k=-i\\omega_k` (elliptic),
    :math:`\\mu_l=\\lambda_l` (hyperbolic).

    :param spec: a :class:`ModelSpec`
    :return: np.ndarray of `n` complex numbers
    """
    mu = []
    for aj, bj in zip(spec.a, spec.b):
        mu.extend([complex(-aj, -bj), complex(-aj, bj)])
    mu.extend(complex(0, -w) for w in spec.omega)
    mu.extend(complex(l, 0) for l in spec.lam)
    mu = np.asarray(mu, dtype=complex)
    assert len(mu) == spec.n, 'wrong number of eigenvalues'
    return mu


def build_H2(spec: ModelSpec):
    """
    The quadratic part :math:`H_2` of the model, in real coordinates.

    :param spec: a :class:`ModelSpec`
    :return: a real :class:`avint.polyalg.ComplexPolynomial` of degree 2
    """
    n = spec.n
    x = [ComplexPolynomial.variable(n, i) for i in range(n)]
    y = [ComplexPolynomial.variable(n, n + i) for i in range(n)]
    H2 = ComplexPolynomial.zero(n)
    for j, (aj, bj) in enumerate(zip(spec.a, spec.b)):
        p, q = 2 * j, 2 * j + 1
        H2 += -aj * (y[p] * x[p] + y[q] * x[q]) + bj * (y[p] * x[q] - y[q] * x[p])
    for k, w in enumerate(spec.omega):
        i = 2 * spec.n1 + k
        H2 += (w / 2) * (x[i] * x[i] + y[i] * y[i])
    for l, lam in enumerate(spec.lam):
        i = spec.n2 + l
        H2 += lam * x[i] * y[i]
    return H2


def quadratic_invariants(spec: ModelSpec):
    """
    The `n` quadratic first integrals of the normal form, one per degree of freedom: for the `j`-th focus pair,
    :math:`y_{2j-1}x_{2j-1}+y_{2j}x_{2j}` and :math:`y_{2j-1}x_{2j}-y_{2j}x_{2j-1}`; :math:`x_k^2+y_k^2` for elliptic
    and :math:`x_ly_l` for hyperbolic degrees of freedom.

    :param spec: a :class:`ModelSpec`
    :return: list of `n` real :class:`avint.polyalg.ComplexPolynomial`
    """
    n = spec.n
    x = [ComplexPolynomial.variable(n, i) for i in range(n)]
    y = [ComplexPolynomial.variable(n, n + i) for i in range(n)]
    Q = []
    for j in range(spec.n1):
        p, q = 2 * j, 2 * j + 1
        Q.append(y[p] * x[p] + y[q] * x[q])
        Q.append(y[p] * x[q] - y[q] * x[p])
    for i in range(2 * spec.n1, spec.n2):
        Q.append(x[i] * x[i] + y[i] * y[i])
    for i in range(spec.n2, n):
        Q.append(x[i] * y[i])
    return Q


def quadratic_invariant_names(spec: ModelSpec):
    """Short labels of the quadratic first integrals, in the order of :meth:`quadratic_invariants`"""
    names = []
    for j in range(spec.n1):
        names.extend([f'Fa{j+1}', f'Fb{j+1}'])
    names.extend(f'E{k+1}' for k in range(spec.n2 - 2 * spec.n1))
    names.extend(f'H{l+1}' for l in range(spec.n - spec.n2))
    return names


class DivisorReport:
    """
    Result of :meth:`divisor_scan`.

    :param frame: pd.DataFrame with one row per vector `k` (columns `k`, `norm`, `divisor`, `abs_divisor`)
    :param divisor_tol: threshold below which a divisor counts as an exact resonance
    :param near_tol: threshold below which a non-resonant divisor is reported as a near resonance
    """

    def __init__(self, frame: pd.DataFrame, divisor_tol, near_tol):
        self.frame = frame
        self.divisor_tol = divisor_tol
        self.near_tol = near_tol

    @property
    def resonances(self):
        """Vectors `k` with :math:`|\\langle\\mu,k\\rangle|` below the divisor tolerance"""
        return list(self.frame.loc[self.frame.abs_divisor < self.divisor_tol, 'k'])

    @property
    def near_resonances(self):
        """Non-resonant vectors `k` with :math:`|\\langle\\mu,k\\rangle|` below the near-resonance tolerance"""
        mask = (self.frame.abs_divisor >= self.divisor_tol) & (self.frame.abs_divisor < self.near_tol)
        return list(self.frame.loc[mask, 'k'])

    @property
    def ok(self):
        return len(self.resonances) == 0

    @property
    def min_divisor(self):
        """Smallest :math:`|\\langle\\mu,k\\rangle|` over all scanned vectors (including resonant ones)"""
        return float(self.frame.abs_divisor.min()) if len(self.frame) else np.inf

    @property
    def min_rate(self):
        """Smallest non-resonant :math:`|\\langle\\mu,k\\rangle|`, i.e., the slowest decay rate of the generator"""
        rates = self.frame.abs_divisor[self.frame.abs_divisor >= self.divisor_tol]
        return float(rates.min()) if len(rates) else np.inf

    def raise_if_resonant(self):
        """Raises :class:`avint.error.ResonanceError` for the first (lowest-order) resonance found, if any"""
        if not self.ok:
            row = self.frame[self.frame.abs_divisor < self.divisor_tol].iloc[0]
            raise ResonanceError(row.k, row.divisor, 'the eigenvalues are resonant within the working order')

    def summary(self):
        """Min/max/mean statistics of the divisor moduli"""
        values = self.frame.abs_divisor
        return {
            'n_vectors': int(len(values)),
            'min': float(values.min()) if len(values) else np.inf,
            'max': float(values.max()) if len(values) else np.inf,
            'mean': float(values.mean()) if len(values) else np.inf,
            'resonances': [list(k) for k in self.resonances],
            'near_resonances': [list(k) for k in self.near_resonances],
        }


def divisor_scan(mu, M, divisor_tol=None, near_tol=None):
    """
    Scans the divisors :math:`\\langle\\mu,k\\rangle` for all nonzero :math:`k=\\beta-\\alpha` with
    :math:`2<|\\alpha|+|\\beta|\\le M` (up to sign). Near resonances are reported with a
    :class:`avint.error.ConditioningWarning`; exact resonances are only reported (see
    :meth:`DivisorReport.raise_if_resonant`).

    :param mu: eigenvalue vector (sequence of `n` complex numbers)
    :param M: the working order (`M >= 3`)
    :param divisor_tol: divisors below this are resonances (default `environ['DIVISOR_TOL']`)
    :param near_tol: divisors below this (and above `divisor_tol`) are near resonances (default
        `environ['NEAR_DIVISOR_TOL']`)
    :return: a :class:`DivisorReport`
    """
    if M < 3:
        raise ValueError(f'the working order must be at least 3 (found M={M})')
    divisor_tol = av._get_tol('DIVISOR_TOL', divisor_tol)
    near_tol = av._get_tol('NEAR_DIVISOR_TOL', near_tol)
    mu = np.asarray(mu, dtype=complex)
    ks = reachable_vectors(len(mu), M)
    divisors = [complex(np.dot(mu, k)) for k in ks]
    frame = pd.DataFrame({
        'k': ks,
        'norm': [sum(abs(ki) for ki in k) for k in ks],
        'divisor': divisors,
        'abs_divisor': [abs(d) for d in divisors],
    })
    report = DivisorReport(frame, divisor_tol, near_tol)
    for k in report.near_resonances:
        warnings.warn(f'near resonance at k={k}: |<mu,k>|={abs(np.dot(mu, k)):.3e}', ConditioningWarning)
    return report


def min_decay_rate(mu, M, divisor_tol=None):
    """
    Slowest decay rate :math:`m=\\min|\\langle\\mu,k\\rangle|` over the non-resonant reachable vectors.

    :param mu: eigenvalue vector
    :param M: the working order
    :param divisor_tol: see :meth:`divisor_scan`
    :return: float (`np.inf` if there is no reachable vector)
    """
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ConditioningWarning)
        return divisor_scan(mu, M, divisor_tol=divisor_tol).min_rate


def check_nonresonant(mu, M, divisor_tol=None):
    """
    Raises :class:`avint.error.ResonanceError` if the eigenvalues are resonant up to order `M`.

    :return: the :class:`DivisorReport`
    """
    report = divisor_scan(mu, M, divisor_tol=divisor_tol)
    report.raise_if_resonant()
    return report


def inner(mu, key):
    """
    :math:`\\langle\\mu,\\beta-\\alpha\\rangle` for a bi-index key.

    :param mu: eigenvalue vector
    :param key: tuple :math:`(\\alpha,\\beta)` of `2n` ints
    :return: complex
    """
    n = len(mu)
    return complex(sum(mu[j] * (key[n + j] - key[j]) for j in range(n)))
