"""
Sparse complex multivariate polynomials in :math:`2n` variables with a degree grading, the Poisson bracket,
linear substitutions and point-wise evaluation.

A monomial is identified by a *bi-index key*: the tuple :math:`(\\alpha_1..\\alpha_n,\\beta_1..\\beta_n)` standing for
:math:`x^\\alpha y^\\beta` in real coordinates or :math:`z^\\alpha w^\\beta` in complex coordinates. The first `n`
variables are the positions (`x` or `z`) and the last `n` the momenta (`y` or `w`).
"""

import math
import operator
from collections import defaultdict
from functools import lru_cache
from numbers import Number
from types import MappingProxyType

import numpy as np

import avint as av


# Bi-index helpers
# ------------------------------------
def make_key(alpha, beta):
    """
    Builds the key of the monomial :math:`z^\\alpha w^\\beta` (or :math:`x^\\alpha y^\\beta`).

    :param alpha: sequence of `n` nonnegative integers
    :param beta: sequence of `n` nonnegative integers
    :return: tuple of `2n` ints
    """
    alpha, beta = tuple(int(a) for a in alpha), tuple(int(b) for b in beta)
    if len(alpha) != len(beta):
        raise ValueError(f'alpha and beta have different lengths ({len(alpha)} vs. {len(beta)})')
    if any(e < 0 for e in alpha + beta):
        raise ValueError(f'negative exponent in alpha={alpha}, beta={beta}')
    return alpha + beta


def split_key(key):
    """
    Splits a key into its `(alpha, beta)` halves.

    :param key: tuple of `2n` ints
    :return: tuple `(alpha, beta)`
    """
    n = len(key) // 2
    return key[:n], key[n:]


def key_degree(key):
    """Total degree :math:`|\\alpha|+|\\beta|` of a key"""
    return sum(key)


def key_order(key):
    """Sorting criterion: lexicographic on :math:`(|\\alpha|+|\\beta|,\\alpha,\\beta)`"""
    return sum(key), key


def key_label(key, names=('z', 'w')):
    """
    Human readable label of a key, e.g., `(2,0,1,0) -> 'z1^2 w1'`.

    :param key: tuple of `2n` ints
    :param names: names of the position and momentum variables
    :return: str
    """
    n = len(key) // 2
    factors = []
    for i, e in enumerate(key):
        if e == 0:
            continue
        var = f'{names[0] if i < n else names[1]}{i % n + 1}'
        factors.append(var if e == 1 else f'{var}^{e}')
    return ' '.join(factors) if factors else '1'


def monomials(n, degree):
    """
    All keys of a given total degree in `2n` variables, in canonical order.

    :param n: number of degrees of freedom
    :param degree: the total degree
    :return: list of tuples
    """
    if degree < 0:
        return []

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return sorted(compositions(degree, 2 * n), key=key_order)


@lru_cache(maxsize=None)
def bracket_monomials(key1, key2):
    """
    Poisson bracket of two unit monomials under the convention

    .. math::
        \\{f,g\\} = \\sum_j \\left(\\frac{\\partial f}{\\partial w_j}\\frac{\\partial g}{\\partial z_j}
                    - \\frac{\\partial f}{\\partial z_j}\\frac{\\partial g}{\\partial w_j}\\right),

    that is, :math:`\\{z^{a}w^{b}, z^{c}w^{d}\\} = \\sum_j (b_jc_j - a_jd_j)\\, z^{a+c-e_j}w^{b+d-e_j}`.

    :param key1: key of the first monomial
    :param key2: key of the second monomial
    :return: tuple of pairs `(key, integer factor)`, one per contributing `j`
    """
    n = len(key1) // 2
    out = []
    for j in range(n):
        factor = key1[n + j] * key2[j] - key1[j] * key2[n + j]
        if factor == 0:
            continue
        key = list(map(operator.add, key1, key2))
        key[j] -= 1
        key[n + j] -= 1
        out.append((tuple(key), factor))
    return tuple(out)


# Polynomials
# ------------------------------------
class ComplexPolynomial:
    """
    Immutable sparse polynomial with complex coefficients in `2n` variables. Coefficients are stored in a map from
    bi-index keys to complex numbers, iterated in the canonical order :math:`(|\\alpha|+|\\beta|,\\alpha,\\beta)`.
    Coefficients whose modulus does not exceed `zero_tol` times the largest modulus in the polynomial are dropped
    (canonical zero).

    >>> x, y = ComplexPolynomial.variable(1, 0), ComplexPolynomial.variable(1, 1)
    >>> (x * y).coefficient((1,), (1,))
    (1+0j)

    :param n: number of degrees of freedom (the polynomial has `2n` variables)
    :param terms: a dict mapping keys (tuples of `2n` nonnegative ints) to coefficients, or an iterable of
        `(key, coefficient)` pairs (repeated keys are summed)
    :param zero_tol: relative canonical-zero threshold; if None, `avint.environ['ZERO_TOL']` is used
    """

    __slots__ = ('_n', '_terms', '_arrays')

    def __init__(self, n, terms=None, zero_tol=None):
        if n < 0:
            raise ValueError(f'the number of degrees of freedom must be nonnegative (found {n})')
        accum = defaultdict(complex)
        if terms is not None:
            items = terms.items() if isinstance(terms, dict) else terms
            for key, coef in items:
                key = tuple(int(e) for e in key)
                if len(key) != 2 * n:
                    raise ValueError(f'key {key} has length {len(key)}, expected {2*n}')
                if any(e < 0 for e in key):
                    raise ValueError(f'key {key} contains negative exponents')
                accum[key] += complex(coef)
        self._n = n
        self._terms = _canonical(accum, zero_tol)

    @classmethod
    def _build(cls, n, terms, zero_tol=None):
        # trusted constructor: keys are assumed valid
        poly = cls.__new__(cls)
        poly._n = n
        poly._terms = _canonical(terms, zero_tol)
        return poly

    @classmethod
    def zero(cls, n):
        """The zero polynomial in `2n` variables"""
        return cls._build(n, {})

    @classmethod
    def constant(cls, n, c):
        """The constant polynomial `c`"""
        return cls._build(n, {(0,) * (2 * n): complex(c)})

    @classmethod
    def variable(cls, n, i, c=1.):
        """
        The polynomial `c * v_i`, with `v_i` the `i`-th variable (0-based; `i<n` are positions, `i>=n` momenta).
        """
        if not 0 <= i < 2 * n:
            raise ValueError(f'variable index {i} out of range for n={n}')
        key = [0] * (2 * n)
        key[i] = 1
        return cls._build(n, {tuple(key): complex(c)})

    @classmethod
    def monomial(cls, alpha, beta, c=1.):
        """The polynomial :math:`c\\,z^\\alpha w^\\beta`"""
        key = make_key(alpha, beta)
        return cls._build(len(key) // 2, {key: complex(c)})

    @property
    def n(self):
        return self._n

    @property
    def terms(self):
        """Read-only view of the map from keys to coefficients"""
        return MappingProxyType(self._terms)

    def items(self):
        return self._terms.items()

    def keys(self):
        return self._terms.keys()

    def __len__(self):
        return len(self._terms)

    def __getitem__(self, key):
        return self._terms.get(tuple(key), 0j)

    def coefficient(self, alpha, beta):
        """Coefficient of :math:`z^\\alpha w^\\beta` (0 if absent)"""
        return complex(self._terms.get(make_key(alpha, beta), 0j))

    def is_zero(self):
        return len(self._terms) == 0

    @property
    def degree(self):
        """Largest total degree over the stored terms (-1 for the zero polynomial)"""
        return max((sum(k) for k in self._terms), default=-1)

    def min_degree(self):
        """Smallest total degree over the stored terms (`math.inf` for the zero polynomial)"""
        return min((sum(k) for k in self._terms), default=math.inf)

    def max_abs(self):
        """Largest coefficient modulus (0 for the zero polynomial)"""
        return max((abs(c) for c in self._terms.values()), default=0.)

    def imag_max(self):
        """Largest modulus of the imaginary parts of the coefficients"""
        return max((abs(c.imag) for c in self._terms.values()), default=0.)

    # ring operations
    def _check_dim(self, other):
        if self._n != other.n:
            raise ValueError(f'dimension mismatch: n={self._n} vs. n={other.n}')

    def __add__(self, other):
        if isinstance(other, Number):
            other = ComplexPolynomial.constant(self._n, other)
        if not isinstance(other, ComplexPolynomial):
            return NotImplemented
        self._check_dim(other)
        accum = defaultdict(complex, self._terms)
        for key, coef in other.items():
            accum[key] += coef
        return ComplexPolynomial._build(self._n, accum)

    __radd__ = __add__

    def __neg__(self):
        return ComplexPolynomial._build(self._n, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, Number):
            return self + (-other)
        if not isinstance(other, ComplexPolynomial):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Returns `c * self`"""
        c = complex(c)
        if c == 0:
            return ComplexPolynomial.zero(self._n)
        return ComplexPolynomial._build(self._n, {k: c * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, ComplexPolynomial):
            return NotImplemented
        self._check_dim(other)
        accum = defaultdict(complex)
        for k1, c1 in self._terms.items():
            for k2, c2 in other.items():
                accum[tuple(map(operator.add, k1, k2))] += c1 * c2
        return ComplexPolynomial._build(self._n, accum)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Number):
            return NotImplemented
        return self.scale(1. / other)

    def __pow__(self, power):
        if not isinstance(power, int) or power < 0:
            raise ValueError(f'only nonnegative integer powers are supported (found {power})')
        result = ComplexPolynomial.constant(self._n, 1.)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    # graded structure
    def truncate(self, M):
        """Keeps exactly the terms with :math:`|\\alpha|+|\\beta|\\le M`"""
        if M < 0:
            raise ValueError(f'the truncation order must be nonnegative (found {M})')
        return ComplexPolynomial._build(self._n, {k: c for k, c in self._terms.items() if sum(k) <= M})

    def homogeneous(self, d):
        """The homogeneous component of degree `d`"""
        return ComplexPolynomial._build(self._n, {k: c for k, c in self._terms.items() if sum(k) == d})

    def filter(self, predicate):
        """Keeps the terms whose key satisfies `predicate(key)`"""
        return ComplexPolynomial._build(self._n, {k: c for k, c in self._terms.items() if predicate(k)})

    def chop(self, tol):
        """Drops the coefficients of modulus not exceeding the absolute threshold `tol`"""
        return ComplexPolynomial._build(self._n, {k: c for k, c in self._terms.items() if abs(c) > tol})

    def conj(self):
        """Conjugates every coefficient"""
        return ComplexPolynomial._build(self._n, {k: c.conjugate() for k, c in self._terms.items()})

    def real(self):
        """Keeps the real part of every coefficient"""
        return ComplexPolynomial._build(self._n, {k: complex(c.real) for k, c in self._terms.items()})

    def allclose(self, other, atol=1e-12):
        """True if every coefficient of `self-other` has modulus at most `atol`"""
        return (self - other).max_abs() <= atol

    def derivative(self, i):
        """Partial derivative with respect to the `i`-th variable (0-based over the `2n` variables)"""
        accum = {}
        for key, coef in self._terms.items():
            e = key[i]
            if e == 0:
                continue
            new_key = list(key)
            new_key[i] = e - 1
            accum[tuple(new_key)] = e * coef
        return ComplexPolynomial._build(self._n, accum)

    # evaluation
    def _dense(self):
        # exponent matrix and coefficient vector, built once
        try:
            return self._arrays
        except AttributeError:
            if self._terms:
                E = np.asarray(list(self._terms.keys()), dtype=int)
            else:
                E = np.zeros((0, 2 * self._n), dtype=int)
            self._arrays = (E, np.asarray(list(self._terms.values()), dtype=complex))
            return self._arrays

    def __call__(self, point):
        """
        Evaluates the polynomial at a point, or at a batch of points.

        :param point: array-like of shape `(2n,)` or `(n_points, 2n)`
        :return: complex, or np.ndarray of shape `(n_points,)`
        """
        point = np.asarray(point)
        if point.shape[-1] != 2 * self._n:
            raise ValueError(f'the point has {point.shape[-1]} coordinates, expected {2*self._n}')
        if not self._terms:
            return 0j if point.ndim == 1 else np.zeros(point.shape[0], dtype=complex)
        E, coefficients = self._dense()
        powers = np.prod(point[..., None, :] ** E, axis=-1)
        return powers @ coefficients

    def gradient(self, point):
        """
        Gradient at a point.

        :param point: array-like of shape `(2n,)`
        :return: np.ndarray of shape `(2n,)`
        """
        point = np.asarray(point)
        if point.shape != (2 * self._n,):
            raise ValueError(f'the point has shape {point.shape}, expected {(2*self._n,)}')
        grad = np.zeros(2 * self._n, dtype=complex)
        if not self._terms:
            return grad
        E, coefficients = self._dense()
        for i in range(2 * self._n):
            Ei = E[:, i]
            mask = Ei > 0
            if not mask.any():
                continue
            Ered = E[mask].copy()
            Ered[:, i] -= 1
            grad[i] = np.sum(coefficients[mask] * Ei[mask] * np.prod(point ** Ered, axis=-1))
        return grad

    def __repr__(self):
        return f'ComplexPolynomial(n={self._n}, terms={dict(self._terms)})'

    def pretty(self, names=('z', 'w'), prec=6):
        """
        A readable rendering of the polynomial, e.g., `(1+0j)*z1 w1 + (0.5+0j)*z1^3`.

        :param names: names of the position and momentum variables
        :param prec: significant digits
        :return: str
        """
        if not self._terms:
            return '0'
        return ' + '.join(f'({c:.{prec}g})*{key_label(k, names)}' for k, c in self._terms.items())


def _canonical(terms, zero_tol=None):
    zero_tol = av._get_tol('ZERO_TOL', zero_tol)
    terms = {k: c for k, c in terms.items() if c != 0}
    if terms:
        threshold = zero_tol * max(abs(c) for c in terms.values())
        terms = {k: c for k, c in terms.items() if abs(c) > threshold}
    return {k: terms[k] for k in sorted(terms, key=key_order)}


# Linear maps
# ------------------------------------
class LinearMap2n:
    """
    A linear map of :math:`\\mathbb{C}^{2n}`, acting on coordinate vectors ordered as :math:`(x_1..x_n,y_1..y_n)`
    (or :math:`(z,w)`). Used as a substitution: the `i`-th old variable is replaced by
    :math:`\\sum_j A_{ij} v_j` (see :meth:`substitute_linear`).

    :param matrix: array-like of shape `(2n, 2n)`
    """

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2 != 0:
            raise ValueError(f'expected a square matrix of even size, found shape {matrix.shape}')
        matrix.setflags(write=False)
        self.matrix = matrix

    @property
    def n(self):
        return self.matrix.shape[0] // 2

    @classmethod
    def identity(cls, n):
        return cls(np.eye(2 * n))

    def __matmul__(self, other):
        if not isinstance(other, LinearMap2n):
            return NotImplemented
        if self.n != other.n:
            raise ValueError(f'dimension mismatch: n={self.n} vs. n={other.n}')
        return LinearMap2n(self.matrix @ other.matrix)

    def inverse(self):
        return LinearMap2n(np.linalg.inv(self.matrix))

    def symplectic_residual(self):
        """Frobenius norm of :math:`A^TJA-J` with `J` the standard form of :math:`dy\\wedge dx`"""
        return av.error.symplectic_residual(self.matrix)

    def is_symplectic(self, tol=1e-14):
        return self.symplectic_residual() <= tol


# Module-level operations
# ------------------------------------
def _check_same_dim(p, q):
    if p.n != q.n:
        raise ValueError(f'dimension mismatch: n={p.n} vs. n={q.n}')


def add(p: ComplexPolynomial, q: ComplexPolynomial):
    """Sum of two polynomials with the same number of variables"""
    _check_same_dim(p, q)
    return p + q


def scale(p: ComplexPolynomial, c):
    """Scalar multiple `c * p`"""
    return p.scale(c)


def multiply(p: ComplexPolynomial, q: ComplexPolynomial):
    """Product of two polynomials with the same number of variables"""
    _check_same_dim(p, q)
    return p * q


def poisson_bracket(f: ComplexPolynomial, g: ComplexPolynomial):
    """
    Poisson bracket

    .. math::
        \\{f,g\\} = \\sum_j \\left(\\frac{\\partial f}{\\partial w_j}\\frac{\\partial g}{\\partial z_j}
                    - \\frac{\\partial f}{\\partial z_j}\\frac{\\partial g}{\\partial w_j}\\right),

    equivalently :math:`\\sum_j (\\partial_{y_j}f\\,\\partial_{x_j}g - \\partial_{x_j}f\\,\\partial_{y_j}g)` in real
    variables. With :math:`\\hat H_2=\\sum_j\\mu_jz_jw_j` this gives
    :math:`\\{z^\\alpha w^\\beta,\\hat H_2\\}=\\langle\\mu,\\beta-\\alpha\\rangle z^\\alpha w^\\beta`, and the derivative of
    `g` along the flow of `f` is :math:`\\{f,g\\}`.

    :param f: a :class:`ComplexPolynomial`
    :param g: a :class:`ComplexPolynomial` with the same `n`
    :return: a :class:`ComplexPolynomial`
    """
    _check_same_dim(f, g)
    accum = defaultdict(complex)
    for k1, c1 in f.items():
        for k2, c2 in g.items():
            for key, factor in bracket_monomials(k1, k2):
                accum[key] += factor * c1 * c2
    return ComplexPolynomial._build(f.n, accum)


def truncate_degree(p: ComplexPolynomial, M: int):
    """Keeps exactly the terms of total degree at most `M`"""
    return p.truncate(M)


def min_degree(p: ComplexPolynomial):
    """Minimal total degree over the stored terms; `math.inf` for the zero polynomial"""
    return p.min_degree()


def compose(p: ComplexPolynomial, images):
    """
    Polynomial substitution: replaces the `i`-th variable of `p` by `images[i]`.

    :param p: a :class:`ComplexPolynomial` in `2n` variables
    :param images: sequence of `2n` :class:`ComplexPolynomial` (all with the same number of variables, which can
        differ from that of `p`)
    :return: a :class:`ComplexPolynomial` in the variables of the images
    """
    images = list(images)
    if len(images) != 2 * p.n:
        raise ValueError(f'expected {2*p.n} images, found {len(images)}')
    n_out = images[0].n
    if any(im.n != n_out for im in images):
        raise ValueError('all images must have the same number of variables')
    cache = [{0: ComplexPolynomial.constant(n_out, 1.), 1: im} for im in images]

    def power(i, e):
        if e not in cache[i]:
            cache[i][e] = power(i, e - 1) * images[i]
        return cache[i][e]

    accum = defaultdict(complex)
    for key, coef in p.items():
        term = ComplexPolynomial.constant(n_out, coef)
        for i, e in enumerate(key):
            if e:
                term = term * power(i, e)
        for k, c in term.items():
            accum[k] += c
    return ComplexPolynomial._build(n_out, accum)


def substitute_linear(p: ComplexPolynomial, A: LinearMap2n):
    """
    Composition with a linear map, :math:`p\\circ A`: the `i`-th variable is replaced by :math:`\\sum_jA_{ij}v_j`.
    Satisfies `substitute_linear(p, A @ B) == substitute_linear(substitute_linear(p, A), B)`.

    :param p: a :class:`ComplexPolynomial`
    :param A: a :class:`LinearMap2n` with the same `n`
    :return: a :class:`ComplexPolynomial` of the same degree
    """
    if A.n != p.n:
        raise ValueError(f'dimension mismatch: polynomial n={p.n} vs. map n={A.n}')
    n = p.n
    images = [
        ComplexPolynomial._build(n, {tuple(int(i == j) for i in range(2 * n)): A.matrix[row, j] for j in range(2 * n)})
        for row in range(2 * n)
    ]
    return compose(p, images)


def evaluate(p: ComplexPolynomial, point):
    """Evaluates `p` at a point of `2n` (real or complex) coordinates"""
    return p(point)


def hamiltonian_vector_field(h: ComplexPolynomial, point):
    """
    The Hamiltonian vector field :math:`(\\partial h/\\partial y, -\\partial h/\\partial x)` at a point.

    :param h: a :class:`ComplexPolynomial`
    :param point: array-like of shape `(2n,)`
    :return: np.ndarray of shape `(2n,)` (real if `h` has real coefficients and the point is real)
    """
    grad = h.gradient(point)
    n = h.n
    field = np.concatenate([grad[n:], -grad[:n]])
    if h.imag_max() == 0 and np.isrealobj(point):
        field = field.real
    return field
