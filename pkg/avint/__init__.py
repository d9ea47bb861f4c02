"""avint: Birkhoff normal forms by continuous averaging and integrable perturbations of polynomial Hamiltonians"""
import os

from . import error
from . import functional
from . import util
from . import polyalg
from . import spectrum
from . import complexify
from . import exppoly
from . import averaging
from . import globalize
from . import data
from . import verify

__version__ = '0.1.0'

environ = {
    'ZERO_TOL': 1e-15,
    'DIVISOR_TOL': 1e-9,
    'NEAR_DIVISOR_TOL': 1e-9,
    'RATE_TOL': 1e-12,
    'CONDITIONING_TOL': 1e-6,
    'DIVERGENCE_TOL': 1e-10,
    'RTOL': 1e-11,
    'ATOL': 1e-13,
    'DELTA_MAX_FACTOR': 30.,
    'DELTA_MAX_CAP': 1e4,
    'FD_STEP': 1e-5,
    'N_JOBS': int(os.environ.get('AVINT_THREADS', 1)),
    'SEED': 0,
}


def _get_njobs(n_jobs):
    """
    If `n_jobs` is None, then it returns `environ['N_JOBS']`;
    if otherwise, returns `n_jobs`.

    :param n_jobs: the number of `n_jobs` or None if not specified
    :return: int
    """
    return environ['N_JOBS'] if n_jobs is None else n_jobs


def _get_tol(name, value=None):
    """
    If `value` is None, then it returns `environ[name]`; if otherwise, returns `value`.

    :param name: a key of `environ` (e.g., 'DIVISOR_TOL')
    :param value: a float or None if not specified
    :return: float
    """
    if value is None:
        if name not in environ:
            raise ValueError(f'unknown tolerance {name}; valid ones are {sorted(environ.keys())}')
        return environ[name]
    return value
