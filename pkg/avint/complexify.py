"""
The linear symplectic complexification :math:`\\vartheta:(z,w)\\mapsto(x,y)`, the operators
:math:`\\Theta(G)=G\\circ\\vartheta`, :math:`Conj` and :math:`Conj_\\vartheta=\\Theta\\,Conj\\,\\Theta^{-1}`, and the
:math:`\\vartheta`-reality predicate.

Per block, the complex coordinates are

    * elliptic: :math:`z_k=(x_k+iy_k)/\\sqrt{2},\\ w_k=(y_k+ix_k)/\\sqrt{2}`
    * focus pair: :math:`z_{2j-1}=((1-i)x_{2j-1}+(1+i)x_{2j})/2,\\ z_{2j}=((1+i)x_{2j-1}+(1-i)x_{2j})/2`, and
      :math:`w_{2j-1}=((1+i)y_{2j-1}+(1-i)y_{2j})/2,\\ w_{2j}=((1-i)y_{2j-1}+(1+i)y_{2j})/2`
    * hyperbolic: :math:`z_l=x_l,\\ w_l=y_l`

so that :math:`dy\\wedge dx=dw\\wedge dz` and :math:`\\Theta(H_2)=\\sum_j\\mu_jz_jw_j`.
"""

import numpy as np

from avint.polyalg import ComplexPolynomial, LinearMap2n, substitute_linear


class ThetaMap:
    """
    The complexification of a model.

    :param forward: :class:`avint.polyalg.LinearMap2n` expressing the real coordinates :math:`(x,y)` in terms of the
        complex ones :math:`(z,w)` (row `i` holds the coefficients of the `i`-th real variable); polynomials are
        complexified by substituting through this map
    :param inverse: :class:`avint.polyalg.LinearMap2n` expressing :math:`(z,w)` in terms of :math:`(x,y)`
    :param n1: number of focus pairs
    :param n2: index bound of the elliptic block
    """

    def __init__(self, forward: LinearMap2n, inverse: LinearMap2n, n1, n2):
        if forward.n != inverse.n:
            raise ValueError(f'dimension mismatch: forward n={forward.n} vs. inverse n={inverse.n}')
        self.forward = forward
        self.inverse = inverse
        self.n1 = n1
        self.n2 = n2

    @property
    def n(self):
        return self.forward.n

    def inversion_residual(self):
        """Largest entry of `forward @ inverse - I`"""
        return float(np.max(np.abs((self.forward @ self.inverse).matrix - np.eye(2 * self.n))))

    def symplectic_residual(self):
        return self.forward.symplectic_residual()

    def reality_swap(self, key):
        """
        The index involution :math:`(\\alpha,\\beta)\\mapsto(\\alpha',\\beta')` of the reality relations: focus pairs
        exchange their two indices, elliptic degrees of freedom exchange :math:`\\alpha_k` and :math:`\\beta_k`,
        hyperbolic ones are left unchanged.

        :param key: tuple of `2n` ints
        :return: tuple of `2n` ints
        """
        n = self.n
        key = list(key)
        out = list(key)
        for j in range(self.n1):
            p, q = 2 * j, 2 * j + 1
            out[p], out[q] = key[q], key[p]
            out[n + p], out[n + q] = key[n + q], key[n + p]
        for k in range(2 * self.n1, self.n2):
            out[k], out[n + k] = key[n + k], key[k]
        return tuple(out)

    def reality_phase(self, key):
        """
        The prefactor :math:`i^{-(\\alpha_k+\\beta_k \\text{ summed over the elliptic block})}`, exponent reduced mod 4.

        :param key: tuple of `2n` ints
        :return: complex, one of `1, -i, -1, i`
        """
        n = self.n
        e = sum(key[k] + key[n + k] for k in range(2 * self.n1, self.n2))
        return (1+0j, -1j, -1+0j, 1j)[e % 4]


def build_theta(spec):
    """
    Assembles the complexification of a model block by block.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :return: a :class:`ThetaMap`
    """
    n = spec.n
    F = np.zeros((2 * n, 2 * n), dtype=complex)  # (x,y) in terms of (z,w)
    B = np.zeros((2 * n, 2 * n), dtype=complex)  # (z,w) in terms of (x,y)
    r2 = 1 / np.sqrt(2)
    for j in range(spec.n1):
        p, q = 2 * j, 2 * j + 1
        P, Q = n + p, n + q
        # z_p, z_q, w_p, w_q in terms of x_p, x_q, y_p, y_q
        B[p, p], B[p, q] = (1 - 1j) / 2, (1 + 1j) / 2
        B[q, p], B[q, q] = (1 + 1j) / 2, (1 - 1j) / 2
        B[P, P], B[P, Q] = (1 + 1j) / 2, (1 - 1j) / 2
        B[Q, P], B[Q, Q] = (1 - 1j) / 2, (1 + 1j) / 2
        # x_p, x_q, y_p, y_q in terms of z_p, z_q, w_p, w_q
        F[p, p], F[p, q] = (1 + 1j) / 2, (1 - 1j) / 2
        F[q, p], F[q, q] = (1 - 1j) / 2, (1 + 1j) / 2
        F[P, P], F[P, Q] = (1 - 1j) / 2, (1 + 1j) / 2
        F[Q, P], F[Q, Q] = (1 + 1j) / 2, (1 - 1j) / 2
    for k in range(2 * spec.n1, spec.n2):
        K = n + k
        B[k, k], B[k, K] = r2, 1j * r2
        B[K, k], B[K, K] = 1j * r2, r2
        F[k, k], F[k, K] = r2, -1j * r2
        F[K, k], F[K, K] = -1j * r2, r2
    for l in range(spec.n2, n):
        L = n + l
        B[l, l] = B[L, L] = 1.
        F[l, l] = F[L, L] = 1.
    return ThetaMap(LinearMap2n(F), LinearMap2n(B), spec.n1, spec.n2)


def to_complex(p: ComplexPolynomial, theta: ThetaMap):
    """
    :math:`\\Theta(p)=p\\circ\\vartheta`, a polynomial in :math:`(z,w)`.

    :param p: a :class:`avint.polyalg.ComplexPolynomial` in real coordinates
    :param theta: a :class:`ThetaMap`
    :return: a :class:`avint.polyalg.ComplexPolynomial` in complex coordinates
    """
    return substitute_linear(p, theta.forward)


def to_real(p_hat: ComplexPolynomial, theta: ThetaMap):
    """
    :math:`\\Theta^{-1}(\\hat p)=\\hat p\\circ\\vartheta^{-1}`, a polynomial in :math:`(x,y)`.

    :param p_hat: a :class:`avint.polyalg.ComplexPolynomial` in complex coordinates
    :param theta: a :class:`ThetaMap`
    :return: a :class:`avint.polyalg.ComplexPolynomial` in real coordinates
    """
    return substitute_linear(p_hat, theta.inverse)


def conj(p: ComplexPolynomial):
    """
    :math:`Conj(G)(x,y)=\\overline{G(\\bar x,\\bar y)}`, i.e., every coefficient conjugated.
    """
    return p.conj()


def conj_theta(p_hat: ComplexPolynomial, theta: ThetaMap):
    """
    :math:`Conj_\\vartheta=\\Theta\\,Conj\\,\\Theta^{-1}`.

    :param p_hat: a :class:`avint.polyalg.ComplexPolynomial` in complex coordinates
    :param theta: a :class:`ThetaMap`
    :return: a :class:`avint.polyalg.ComplexPolynomial` in complex coordinates
    """
    return to_complex(conj(to_real(p_hat, theta)), theta)


def conj_theta_coefficients(p_hat: ComplexPolynomial, theta: ThetaMap):
    """
    :math:`Conj_\\vartheta` computed directly on the coefficients:
    :math:`(Conj_\\vartheta\\hat G)_{\\alpha,\\beta}=i^{-e(\\alpha,\\beta)}\\,\\overline{\\hat G_{\\alpha',\\beta'}}`
    (see :meth:`ThetaMap.reality_swap` and :meth:`ThetaMap.reality_phase`).
    """
    terms = {}
    for key, coef in p_hat.items():
        target = theta.reality_swap(key)
        terms[target] = complex(theta.reality_phase(target) * complex(coef).conjugate())
    return ComplexPolynomial._build(p_hat.n, terms)


class ThetaReality:
    """
    Outcome of :meth:`is_theta_real`. Evaluates to True in boolean context when both checks pass.

    :param residual: largest violation of the coefficient reality relations
    :param residual_direct: largest coefficient of :math:`Conj_\\vartheta(\\hat p)-\\hat p`
    :param tol: the (absolute) tolerance both residuals are compared against
    """

    def __init__(self, residual, residual_direct, tol):
        self.residual = residual
        self.residual_direct = residual_direct
        self.tol = tol

    @property
    def by_coefficients(self):
        return self.residual <= self.tol

    @property
    def by_conjugation(self):
        return self.residual_direct <= self.tol

    @property
    def consistent(self):
        """True if both checks reach the same verdict"""
        return self.by_coefficients == self.by_conjugation

    @property
    def is_real(self):
        return self.by_coefficients and self.by_conjugation

    def __bool__(self):
        return self.is_real

    def __repr__(self):
        return (f'ThetaReality(is_real={self.is_real}, residual={self.residual:.3e}, '
                f'residual_direct={self.residual_direct:.3e}, consistent={self.consistent})')


def is_theta_real(p_hat: ComplexPolynomial, theta: ThetaMap, tol=1e-12, relative=True):
    """
    Checks whether :math:`\\hat p` is the complexification of a real polynomial, both through the coefficient relations
    :math:`\\hat G_{\\alpha,\\beta}=i^{-e(\\alpha,\\beta)}\\overline{\\hat G_{\\alpha',\\beta'}}` and through the
    identity :math:`Conj_\\vartheta(\\hat p)=\\hat p`.

    :param p_hat: a :class:`avint.polyalg.ComplexPolynomial` in complex coordinates
    :param theta: a :class:`ThetaMap`
    :param tol: tolerance on the residuals
    :param relative: if True, `tol` is scaled by `max(1, p_hat.max_abs())`
    :return: a :class:`ThetaReality`
    """
    if p_hat.n != theta.n:
        raise ValueError(f'dimension mismatch: polynomial n={p_hat.n} vs. map n={theta.n}')
    if relative:
        tol = tol * max(1., p_hat.max_abs())
    residual = 0.
    for key in set(p_hat.keys()) | {theta.reality_swap(k) for k in p_hat.keys()}:
        partner = theta.reality_swap(key)
        gap = abs(p_hat[key] - theta.reality_phase(key) * complex(p_hat[partner]).conjugate())
        residual = max(residual, float(gap))
    residual_direct = float((conj_theta(p_hat, theta) - p_hat).max_abs())
    return ThetaReality(residual, residual_direct, float(tol))
