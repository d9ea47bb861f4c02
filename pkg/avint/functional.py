import itertools

import numpy as np


def symplectic_form(n):
    """
    Matrix of the standard symplectic form on :math:`\\mathbb{R}^{2n}` with coordinates :math:`(x_1..x_n,y_1..y_n)`
    such that the Hamiltonian vector field reads :math:`J\\nabla H=(\\partial H/\\partial y,-\\partial H/\\partial x)`:

    .. math::
        J = \\begin{pmatrix} 0 & I_n \\\\ -I_n & 0 \\end{pmatrix}

    :param n: number of degrees of freedom
    :return: np.ndarray of shape `(2n, 2n)`
    """
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def normalize_sign(k):
    """
    Returns `k` or `-k`, whichever has its first nonzero entry positive. Divisors :math:`|\\langle\\mu,k\\rangle|`
    do not depend on this choice.

    :param k: array-like of ints
    :return: tuple of ints
    """
    k = tuple(int(ki) for ki in k)
    for ki in k:
        if ki != 0:
            return k if ki > 0 else tuple(-kj for kj in k)
    return k


def reachable_vectors(n, M):
    """
    Enumerates (up to sign) the nonzero integer vectors :math:`k=\\beta-\\alpha` with :math:`2<|\\alpha|+|\\beta|\\le M`.
    A vector with :math:`|k|_1=d` is reachable at any degree :math:`d'\\ge d` with the same parity, hence all
    vectors with :math:`1\\le|k|_1\\le M` qualify, except :math:`|k|_1=2` when `M=3`.

    :param n: number of degrees of freedom
    :param M: the working order
    :return: list of tuples, sorted by 1-norm and then lexicographically
    """
    found = set()
    for k in itertools.product(range(-M, M + 1), repeat=n):
        norm = sum(abs(ki) for ki in k)
        if norm == 0 or norm > M:
            continue
        if norm == 2 and M < 4:
            continue
        found.add(normalize_sign(k))
    return sorted(found, key=lambda k: (sum(abs(ki) for ki in k), k))


def loglog_slope(eps, values):
    """
    Least-squares slope of :math:`\\log|values|` against :math:`\\log(eps)`.

    :param eps: array-like of positive scales
    :param values: array-like of the same length
    :return: float
    """
    eps = np.asarray(eps, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    slope, _ = np.polyfit(np.log(eps), np.log(values), deg=1)
    return float(slope)


def fit_decay_rate(deltas, norms):
    """
    Fits :math:`\\|K(\\delta)\\|\\approx Ce^{-r\\delta}` by least squares on :math:`\\log\\|K\\|` and returns `r`.

    :param deltas: array-like of sampling times
    :param norms: array-like of positive norms
    :return: float, the fitted rate `r`
    """
    deltas = np.asarray(deltas, dtype=float)
    norms = np.asarray(norms, dtype=float)
    slope, _ = np.polyfit(deltas, np.log(norms), deg=1)
    return float(-slope)
