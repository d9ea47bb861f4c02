import contextlib
import os
from contextlib import ExitStack
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

import avint as av


def parallel(func, args, n_jobs=None, seed=None, asarray=True, backend='loky'):
    """
    A wrapper of multiprocessing:

    >>> Parallel(n_jobs=n_jobs)(
    >>>      delayed(func)(args_i) for args_i in args
    >>> )

    that takes the `avint.environ` variable as input silently.
    Seeds the child processes to ensure reproducibility when n_jobs>1.

    :param func: callable
    :param args: args of func
    :param n_jobs: number of workers; if None, it is taken from `avint.environ['N_JOBS']` (which in turn is
        initialized from the `AVINT_THREADS` environment variable)
    :param seed: the numeric seed
    :param asarray: set to True to return a np.ndarray instead of a list
    :param backend: indicates the backend used for handling parallel works
    """
    n_jobs = av._get_njobs(n_jobs)

    def func_dec(environ, seed, *args):
        av.environ = environ.copy()
        av.environ['N_JOBS'] = 1
        with ExitStack() as stack:
            if seed is not None:
                stack.enter_context(temp_seed(seed))
            return func(*args)

    if n_jobs == 1:
        out = []
        for i, args_i in enumerate(args):
            with ExitStack() as stack:
                if seed is not None:
                    stack.enter_context(temp_seed(seed + i))
                out.append(func(args_i))
    else:
        out = Parallel(n_jobs=n_jobs, backend=backend)(
            delayed(func_dec)(av.environ, None if seed is None else seed+i, args_i) for i, args_i in enumerate(args)
        )
    if asarray:
        out = np.asarray(out)
    return out


@contextlib.contextmanager
def temp_seed(random_state):
    """
    Can be used in a "with" context to set a temporal seed without modifying the outer numpy's current state. E.g.:

    >>> with temp_seed(random_seed):
    >>>  pass # do any computation depending on np.random functionality

    :param random_state: the seed to set within the "with" context
    """
    if random_state is not None:
        state = np.random.get_state()
        np.random.seed(random_state)
    try:
        yield
    finally:
        if random_state is not None:
            np.random.set_state(state)


def unit_ball_points(n_points, dim, radius=1., seed=None):
    """
    Draws points uniformly at random from the ball of a given radius in :math:`\\mathbb{R}^{dim}`.

    :param n_points: number of points
    :param dim: dimension of the ambient space (`2n` for phase-space points)
    :param radius: radius of the ball (default 1)
    :param seed: seed for `np.random.default_rng`; if None, `avint.environ['SEED']` is used
    :return: np.ndarray of shape `(n_points, dim)`
    """
    rng = np.random.default_rng(av.environ['SEED'] if seed is None else seed)
    directions = rng.normal(size=(n_points, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(n_points, 1)) ** (1. / dim)
    return directions * radii


def unit_directions(n_directions, dim, seed=None):
    """
    Draws unit vectors uniformly at random from the sphere in :math:`\\mathbb{R}^{dim}`.

    :param n_directions: number of directions
    :param dim: dimension of the ambient space
    :param seed: seed for `np.random.default_rng`; if None, `avint.environ['SEED']` is used
    :return: np.ndarray of shape `(n_directions, dim)`
    """
    rng = np.random.default_rng(av.environ['SEED'] if seed is None else seed)
    u = rng.normal(size=(n_directions, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def create_parent_dir(path):
    """
    Creates the parent dir (if any) of a given path, if not exists. E.g., for `./path/to/file.txt`, the path `./path/to`
    is created.

    :param path: the path
    """
    parentdir = Path(path).parent
    if parentdir:
        os.makedirs(parentdir, exist_ok=True)


def save_text_file(path, text):
    """
    Saves a text file to disk, given its full path, and creates the parent directory if missing.

    :param path: path where to save the path.
    :param text: text to save.
    """
    create_parent_dir(path)
    with open(path, 'wt') as fout:
        fout.write(text)
