"""Residual measures used by the verification checks, and the exceptions raised across avint"""

import numpy as np


class ResonanceError(ValueError):
    """
    Raised when a divisor :math:`\\langle\\mu,k\\rangle` vanishes (within tolerance) for some integer vector
    :math:`k\\neq 0` reachable at the working order.

    :param k: tuple of ints, the resonant vector (normalized so that its first nonzero entry is positive)
    :param divisor: the complex value :math:`\\langle\\mu,k\\rangle`
    :param msg: optional extra message
    """

    def __init__(self, k, divisor, msg=''):
        self.k = tuple(int(ki) for ki in k)
        self.divisor = complex(divisor)
        text = f'resonance k={self.k} (|<mu,k>|={abs(self.divisor):.3e})'
        if msg:
            text += f': {msg}'
        super().__init__(text)


class ModelFormatError(ValueError):
    """
    Raised when a model description cannot be turned into a valid :class:`avint.spectrum.ModelSpec`.
    All violations found are collected in `violations`.

    :param violations: list of strings, one per violation
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__('invalid model:\n\t' + '\n\t'.join(self.violations))


class DivergentTermError(ArithmeticError):
    """
    Raised when the limit :math:`\\delta\\to+\\infty` of an evolving coefficient contains a non-decaying term
    :math:`\\delta^s` with :math:`s>0` (signals a resonance or an inconsistent system).
    """


class FlowError(RuntimeError):
    """
    Raised when the numerical integration of a flow does not succeed.
    """


class ConditioningWarning(UserWarning):
    """
    Category of the warnings issued for near resonances, ill-conditioned rate coincidences and other
    numerical-quality issues.
    """


def max_abs(values, values_hat):
    """Largest absolute deviation, :math:`\\max_i |v_i-\\hat{v}_i|`.

    :param values: array-like with the reference values
    :param values_hat: array-like with the computed values
    :return: float
    """
    values, values_hat = np.asarray(values), np.asarray(values_hat)
    assert values.shape == values_hat.shape, f'wrong shape {values.shape} vs. {values_hat.shape}'
    if values.size == 0:
        return 0.
    return float(np.max(np.abs(values - values_hat)))


def coefficient_residual(p, q):
    """Largest coefficient deviation between two polynomials (keys missing on one side count as zero).

    :param p: a :class:`avint.polyalg.ComplexPolynomial`
    :param q: a :class:`avint.polyalg.ComplexPolynomial`
    :return: float
    """
    return (p - q).max_abs()


def relative_coefficient_residual(p, q):
    """Coefficient residual relative to the largest coefficient of `p` (absolute if `p` is zero).

    :param p: the reference :class:`avint.polyalg.ComplexPolynomial`
    :param q: a :class:`avint.polyalg.ComplexPolynomial`
    :return: float
    """
    scale = p.max_abs()
    residual = coefficient_residual(p, q)
    return residual / scale if scale > 0 else residual


def symplectic_residual(A, J=None):
    """Frobenius norm of :math:`A^TJA-J`.

    :param A: square matrix of even size `2n`
    :param J: the symplectic form; if None, the standard form of :math:`dy\\wedge dx` is used
        (see :meth:`avint.functional.symplectic_form`)
    :return: float
    """
    from avint.functional import symplectic_form
    A = np.asarray(A)
    if J is None:
        J = symplectic_form(A.shape[0] // 2)
    return float(np.linalg.norm(A.T @ J @ A - J))

