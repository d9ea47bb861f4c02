"""
Exp-polynomial functions of the averaging time, :math:`f(\\delta)=\\sum c\\,\\delta^se^{-\\nu\\delta}`, and the closed-form
solution of damped linear equations driven by them.
"""

import math
import warnings
from numbers import Number

import numpy as np

import avint as av
from avint.error import DivergentTermError, ConditioningWarning


class ExpPolyFunction:
    """
    A finite sum of terms :math:`c\\,\\delta^se^{-\\nu\\delta}` with complex `c`, integer :math:`s\\ge0` and real
    :math:`\\nu\\ge0`. Terms whose rates differ by at most `rate_tol` are merged (the rate first seen is kept), and
    terms with negligible coefficients are dropped.

    >>> f = ExpPolyFunction([(3., 0, 2.)])   # 3 e^{-2 delta}
    >>> f(0.)
    (3+0j)

    :param terms: iterable of triplets `(c, s, nu)`
    :param rate_tol: merging tolerance for rates; if None, `avint.environ['RATE_TOL']` is used
    """

    __slots__ = ('_terms',)

    def __init__(self, terms=(), rate_tol=None):
        rate_tol = av._get_tol('RATE_TOL', rate_tol)
        accum = {}
        rates = []
        for c, s, nu in terms:
            if int(s) != s or s < 0:
                raise ValueError(f'the power of delta must be a nonnegative integer (found {s})')
            nu = float(nu)
            if nu < -rate_tol:
                raise ValueError(f'rates must be nonnegative (found {nu})')
            nu = _snap_rate(nu, rates, rate_tol)
            accum[(int(s), nu)] = accum.get((int(s), nu), 0j) + complex(c)
        self._terms = _canonical(accum)

    @classmethod
    def _build(cls, accum):
        f = cls.__new__(cls)
        f._terms = _canonical(accum)
        return f

    @classmethod
    def zero(cls):
        return cls._build({})

    @classmethod
    def constant(cls, c):
        return cls._build({(0, 0.): complex(c)})

    @classmethod
    def exp(cls, c, nu):
        """The function :math:`c\\,e^{-\\nu\\delta}`"""
        return cls([(c, 0, nu)])

    @property
    def terms(self):
        """List of triplets `(c, s, nu)` sorted by rate and power"""
        return [(c, s, nu) for (s, nu), c in self._terms.items()]

    def __len__(self):
        return len(self._terms)

    def is_zero(self):
        return len(self._terms) == 0

    @property
    def rates(self):
        """Sorted list of the distinct rates"""
        return sorted({nu for (_, nu) in self._terms})

    def max_abs(self):
        return max((abs(c) for c in self._terms.values()), default=0.)

    def __add__(self, other):
        if isinstance(other, Number):
            other = ExpPolyFunction.constant(other)
        if not isinstance(other, ExpPolyFunction):
            return NotImplemented
        return ExpPolyFunction(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return ExpPolyFunction._build({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = complex(c)
        if c == 0:
            return ExpPolyFunction.zero()
        return ExpPolyFunction._build({k: c * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, ExpPolyFunction):
            return NotImplemented
        return ExpPolyFunction([
            (c1 * c2, s1 + s2, nu1 + nu2) for (s1, nu1), c1 in self._terms.items() for (s2, nu2), c2 in other._terms.items()
        ])

    __rmul__ = __mul__

    def __call__(self, delta):
        """
        Evaluates the function.

        :param delta: a real number or an array of real numbers
        :return: complex, or np.ndarray of complex with the shape of `delta`
        """
        delta = np.asarray(delta, dtype=float)
        out = np.zeros(delta.shape, dtype=complex)
        for (s, nu), c in self._terms.items():
            out = out + c * delta ** s * np.exp(-nu * delta)
        return complex(out) if out.ndim == 0 else out

    def derivative(self):
        """The derivative with respect to :math:`\\delta`, again an exp-polynomial"""
        terms = []
        for (s, nu), c in self._terms.items():
            if s > 0:
                terms.append((s * c, s - 1, nu))
            if nu != 0:
                terms.append((-nu * c, s, nu))
        return ExpPolyFunction(terms)

    def divergent_part(self):
        """The non-decaying terms :math:`\\delta^s` with `s>0` (rate 0)"""
        return ExpPolyFunction._build({(s, nu): c for (s, nu), c in self._terms.items() if nu == 0 and s > 0})

    def limit(self, divergence_tol=None):
        """
        The limit :math:`\\delta\\to+\\infty`, i.e., the sum of the constant (`s=0`, `nu=0`) terms.

        :param divergence_tol: largest modulus tolerated for a non-decaying term :math:`\\delta^s`, `s>0`; if None,
            `avint.environ['DIVERGENCE_TOL']` is used
        :return: complex
        """
        divergence_tol = av._get_tol('DIVERGENCE_TOL', divergence_tol)
        divergent = self.divergent_part()
        if divergent.max_abs() > divergence_tol:
            raise DivergentTermError(f'the function does not converge: non-decaying terms {divergent}')
        return self._terms.get((0, 0.), 0j)

    def __repr__(self):
        if not self._terms:
            return '0'
        parts = []
        for (s, nu), c in self._terms.items():
            part = f'({c:.6g})'
            if s:
                part += f'*d^{s}' if s > 1 else '*d'
            if nu:
                part += f'*exp(-{nu:.6g}d)'
            parts.append(part)
        return ' + '.join(parts)


def _snap_rate(nu, rates, rate_tol):
    if abs(nu) <= rate_tol:
        return 0.
    for r in rates:
        if abs(r - nu) <= rate_tol:
            return r
    rates.append(nu)
    return nu


def _canonical(accum):
    accum = {k: c for k, c in accum.items() if c != 0}
    if accum:
        threshold = av.environ['ZERO_TOL'] * max(abs(c) for c in accum.values())
        accum = {k: c for k, c in accum.items() if abs(c) > threshold}
    return {k: accum[k] for k in sorted(accum, key=lambda sk: (sk[1], sk[0]))}


def solve_damped_linear(lam, f: ExpPolyFunction, c0, rate_tol=None, conditioning_tol=None):
    """
    Closed-form solution of :math:`c'=-\\lambda c-f(\\delta)`, :math:`c(0)=c_0`. Each source term
    :math:`a\\,\\delta^se^{-\\nu\\delta}` contributes

        * :math:`e^{-\\nu\\delta}\\,\\frac{-a}{\\kappa}\\sum_{k=0}^s\\left(\\frac{-1}{\\kappa}\\right)^k\\frac{s!}{(s-k)!}\\delta^{s-k}`
          with :math:`\\kappa=\\lambda-\\nu`, when :math:`\\nu\\neq\\lambda`;
        * :math:`-a\\,\\frac{\\delta^{s+1}}{s+1}e^{-\\lambda\\delta}` when :math:`\\nu=\\lambda` (within `rate_tol`);

    and the homogeneous term :math:`Ce^{-\\lambda\\delta}` restores the initial condition. Rates closer than
    `conditioning_tol` (but not merged) produce large :math:`1/\\kappa` factors and trigger a
    :class:`avint.error.ConditioningWarning`.

    :param lam: the damping rate, :math:`\\lambda\\ge0`
    :param f: the source, an :class:`ExpPolyFunction`
    :param c0: the initial value
    :param rate_tol: see :class:`ExpPolyFunction`
    :param conditioning_tol: if None, `avint.environ['CONDITIONING_TOL']` is used
    :return: an :class:`ExpPolyFunction`
    """
    rate_tol = av._get_tol('RATE_TOL', rate_tol)
    conditioning_tol = av._get_tol('CONDITIONING_TOL', conditioning_tol)
    lam = float(lam)
    if lam < 0:
        raise ValueError(f'the damping rate must be nonnegative (found {lam})')

    terms = []
    initial = 0j
    for a, s, nu in f.terms:
        kappa = lam - nu
        if abs(kappa) <= rate_tol:
            terms.append((-a / (s + 1), s + 1, lam))
            continue
        if abs(kappa) < conditioning_tol:
            warnings.warn(f'ill-conditioned rate coincidence: |lambda-nu|={abs(kappa):.3e}', ConditioningWarning)
        lead = -a / kappa
        for k in range(s + 1):
            coef = lead * (-1. / kappa) ** k * math.factorial(s) / math.factorial(s - k)
            terms.append((coef, s - k, nu))
            if k == s:
                initial += coef
    terms.append((complex(c0) - initial, 0, lam))
    return ExpPolyFunction(terms, rate_tol=rate_tol)
