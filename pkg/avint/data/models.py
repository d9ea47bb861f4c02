import numpy as np

from avint.polyalg import ComplexPolynomial, monomials
from avint.spectrum import ModelSpec


BUILTIN_MODELS = ['elliptic-x3', 'elliptic-x4', 'elliptic-x3x4', 'elliptic2-cubic', 'elliptic-cubic-weak',
                  'elliptic2-cubic-weak', 'resonant-1-2', 'hyperbolic-x3', 'focus-cubic']


def random_cubic(n, scale=0.5, seed=0):
    """
    Real cubic polynomial in `2n` variables with coefficients drawn from a standard normal, scaled by `scale`.

    :param n: degrees of freedom
    :param scale: multiplies every coefficient
    :param seed: seed for `np.random.default_rng`
    :return: a :class:`avint.polyalg.ComplexPolynomial`
    """
    keys = monomials(n, 3)
    coeffs = scale * np.random.default_rng(seed).normal(size=len(keys))
    return ComplexPolynomial(n, dict(zip(keys, coeffs)))


def fetch_model(name) -> ModelSpec:
    """
    Returns a built-in model. The list of valid names can be accessed in `avint.data.models.BUILTIN_MODELS`:

        - 'elliptic-x3', 'elliptic-x4', 'elliptic-x3x4': one elliptic degree of freedom with :math:`\\omega=1` and
          :math:`H_*=x^3`, :math:`x^4` and :math:`x^3+x^4` respectively
        - 'elliptic2-cubic': two elliptic degrees of freedom with :math:`\\omega=(1,\\sqrt{2})` and a random cubic
          (seed 0, scale 0.5)
        - 'elliptic-cubic-weak': :math:`\\omega=1` and :math:`H_*=0.005(x^3+y^3)`
        - 'elliptic2-cubic-weak': as 'elliptic2-cubic', with the random cubic drawn at scale 0.01
        - 'resonant-1-2': :math:`\\omega=(1,2)` with :math:`H_*=x_1^2x_2`; resonant at order 3
        - 'hyperbolic-x3': one saddle with :math:`\\lambda=1` and :math:`H_*=x^3+y^3`
        - 'focus-cubic': one focus pair with :math:`(a,b)=(0.5,1)` and :math:`H_*=x_1^3+x_2y_1^2`

    The two weak models keep the terms of `F` beyond the leading one small on the whole window
    :math:`\\epsilon\\in[10^{-3},10^{-1}]` of the vanishing-order test.

    :param name: the name of the model
    :return: a :class:`avint.spectrum.ModelSpec`
    """
    assert name in BUILTIN_MODELS, \
        f'Name {name} does not match any built-in model. Valid ones are {BUILTIN_MODELS}'

    if name == 'elliptic-x3':
        return ModelSpec(omega=[1.], Hstar={(3, 0): 1.}, name=name)
    if name == 'elliptic-x4':
        return ModelSpec(omega=[1.], Hstar={(4, 0): 1.}, name=name)
    if name == 'elliptic-x3x4':
        return ModelSpec(omega=[1.], Hstar={(3, 0): 1., (4, 0): 1.}, name=name)
    if name == 'elliptic2-cubic':
        return ModelSpec(omega=[1., np.sqrt(2.)], Hstar=random_cubic(2), name=name)
    if name == 'elliptic-cubic-weak':
        return ModelSpec(omega=[1.], Hstar={(3, 0): 0.005, (0, 3): 0.005}, name=name)
    if name == 'elliptic2-cubic-weak':
        return ModelSpec(omega=[1., np.sqrt(2.)], Hstar=random_cubic(2, scale=0.01), name=name)
    if name == 'resonant-1-2':
        return ModelSpec(omega=[1., 2.], Hstar={(2, 1, 0, 0): 1.}, name=name)
    if name == 'hyperbolic-x3':
        return ModelSpec(lam=[1.], Hstar={(3, 0): 1., (0, 3): 1.}, name=name)
    if name == 'focus-cubic':
        return ModelSpec(n1=1, a=[0.5], b=[1.], Hstar={(3, 0, 0, 0): 1., (0, 1, 2, 0): 1.}, name=name)
