import itertools
import warnings

import numpy as np
import pandas as pd

from avint.averaging import averaging_rhs, coupling_source, differentiate, generator_at, xi
from avint.complexify import is_theta_real
from avint.error import ConditioningWarning, symplectic_residual, relative_coefficient_residual
from avint.functional import fit_decay_rate, loglog_slope, symplectic_form
from avint.globalize import flow_forward, flow_many, flow_with_jacobian, jacobian, mollifier_order, trajectory, FlowConfig
from avint.polyalg import poisson_bracket
from avint.spectrum import inner, quadratic_invariants, quadratic_invariant_names
from avint.util import unit_directions, unit_ball_points, parallel


# Averaging checks
# ------------------------------------
def initial_condition_residual(ev, Hhat_star):
    """Largest coefficient gap between the evolving polynomial at 0 and the truncated initial data"""
    return (ev.at(0.) - Hhat_star.truncate(ev.M)).max_abs()


def decay_law_residual(ev, Hhat_star, deltas=(0.1, 1., 10.)):
    """
    For a purely cubic nonlinear part, largest gap between the coefficients and
    :math:`\\hat H_{\\alpha,\\beta}e^{-|\\langle\\mu,\\beta-\\alpha\\rangle|\\delta}`.
    """
    gap = 0.
    for key, c in Hhat_star.homogeneous(3).items():
        rate = abs(inner(ev.mu, key))
        for d in deltas:
            gap = max(gap, abs(ev[key](d) - c * np.exp(-rate * d)))
    return gap


def flow_consistency_residual(ev, deltas=(0., 0.5, 1., 5.)):
    """
    Largest coefficient gap between the term-wise derivative of the evolving polynomial and the averaging
    right-hand side :math:`-\\{\\hat\\xi\\hat{\\mathcal H}_*,\\hat H_2+\\hat{\\mathcal H}_*\\}` at the sampled times.
    """
    derivative = differentiate(ev)
    return max((derivative.at(d) - averaging_rhs(ev.at(d), ev.mu, ev.M, ev.divisor_tol)).max_abs() for d in deltas)


def coupling_formula_residual(ev, delta=1.):
    """
    Largest gap between the lifted Poisson bracket and the explicit coupling formula for
    :math:`\\{\\hat\\xi\\hat{\\mathcal H}_*,\\hat{\\mathcal H}_*\\}` at a given time, over every monomial of degree at most `M`.
    """
    values = ev.at(delta)
    bracket = poisson_bracket(xi(values, ev.mu, ev.M, ev.divisor_tol), values).truncate(ev.M)
    keys = set(bracket.keys()) | {k for k in ev.keys()}
    return max((abs(bracket[k] - coupling_source(values, ev.mu, ev.M, k, ev.divisor_tol)) for k in keys), default=0.)


def reality_residual(ev, theta, deltas=(0., 0.5, 1., 5.)):
    """
    Largest :math:`\\vartheta`-reality residual (both checks) of the evolving polynomial and of the generator.

    :return: tuple `(residual, consistent)`; `consistent` is False if the two checks ever disagree
    """
    residual, consistent = 0., True
    for d in deltas:
        for p in (ev.at(d), generator_at(ev, ev.mu, ev.M, d, ev.divisor_tol)):
            check = is_theta_real(p, theta, tol=1e-11)
            residual = max(residual, check.residual, check.residual_direct)
            consistent &= check.consistent
    return residual, consistent


def generator_decay(ev, deltas=None):
    """
    Least-squares exponential rate of :math:`\\|\\hat K(\\delta)\\|` (largest coefficient modulus).

    :param deltas: sampling times (default: 11 points in `[2, 12]`)
    :return: tuple `(fitted rate, slowest rate of the generator)`
    """
    deltas = np.linspace(2., 12., 11) if deltas is None else np.asarray(deltas)
    K = ev.generator()
    norms = [np.max(np.abs(K.coefficient_values(d))) if len(K) else 0. for d in deltas]
    if not len(K) or min(norms) <= 0:
        return np.inf, K.slowest_rate()
    return fit_decay_rate(deltas, norms), K.slowest_rate()


def cross_oracle_residual(nf_averaging, nf_birkhoff):
    """
    Relative gap between the resonant coefficients of two normal forms.
    """
    return relative_coefficient_residual(nf_birkhoff.N_hat, nf_averaging.N_hat)


def mollifier_min_order(gen, deltas=(0., 1., 5.)):
    """
    Smallest vanishing order of :math:`P\\,e^{-(x^2+y^2)}-K` over the sampled times (`math.inf` for a zero generator).
    """
    return min(mollifier_order(gen.K_at(d), gen.P_at(d), gen.M) for d in deltas)


# Flow checks
# ------------------------------------
def roundtrip_residual(points, gen, cfg=None, n_jobs=None):
    """Largest :math:`|\\Psi^{-1}(\\Psi(p))-p|` over the points"""
    images = flow_many(points, gen, cfg, n_jobs=n_jobs)
    back = flow_many(images, gen, cfg, backward=True, n_jobs=n_jobs)
    return float(np.max(np.linalg.norm(back - np.atleast_2d(points), axis=1)))


def symplecticity_residual(points, gen, cfg=None, method='central', n_jobs=None):
    """Largest :math:`\\|A^TJA-J\\|` over the Jacobians of :math:`\\Psi` at the points"""
    cfg = cfg or FlowConfig()
    residuals = parallel(lambda p: symplectic_residual(jacobian(p, gen, cfg, method=method)), np.atleast_2d(points),
                         n_jobs=n_jobs, backend='threading')
    return float(np.max(residuals))


def tail_residual(points, gen, cfg=None, n_jobs=None):
    """Largest change of :math:`\\Psi(p)` when the final averaging time is doubled"""
    cfg = cfg or FlowConfig()
    images = flow_many(points, gen, cfg, n_jobs=n_jobs)
    doubled = flow_many(points, gen, cfg.doubled(gen), n_jobs=n_jobs)
    return float(np.max(np.linalg.norm(doubled - images, axis=1)))


class VanishingOrder:
    """
    Result of :meth:`vanishing_order_test`.

    :param frame: pd.DataFrame with one row per direction (columns `direction`, `slope`, `skipped`)
    :param threshold: the acceptance threshold on the minimal slope
    """

    def __init__(self, frame, threshold):
        self.frame = frame
        self.threshold = threshold

    @property
    def slopes(self):
        return self.frame.slope[~self.frame.skipped].to_numpy()

    @property
    def identically_small(self):
        """True if every direction was skipped (all samples below the floor)"""
        return bool(self.frame.skipped.all())

    @property
    def min_slope(self):
        return float(self.slopes.min()) if len(self.slopes) else np.inf

    @property
    def passed(self):
        return self.min_slope >= self.threshold

    def __repr__(self):
        if self.identically_small:
            return 'VanishingOrder(identically small)'
        return (f'VanishingOrder(min_slope={self.min_slope:.4f}, mean_slope={self.slopes.mean():.4f}, '
                f'skipped={int(self.frame.skipped.sum())}/{len(self.frame)})')


def vanishing_order_test(evalF, M, dim, directions=20, eps_range=(1e-3, 1e-1), n_eps=8, seed=None, floor=1e-300,
                         margin=0.2, n_jobs=None):
    """
    Empirical vanishing order of `F` at the origin: for random unit directions `u` and log-spaced scales `eps`,
    regresses :math:`\\log|F(\\epsilon u)|` on :math:`\\log\\epsilon`. Directions with a sample not above `floor` are
    skipped (and reported).

    :param evalF: callable taking a point of `dim` reals and returning a real
    :param M: the working order; the acceptance threshold is `M+1-margin`
    :param dim: dimension of the points (`2n`)
    :param directions: number of random directions
    :param eps_range: tuple `(eps_min, eps_max)`
    :param n_eps: number of scales (at least 8)
    :param seed: seed of the directions; if None, `avint.environ['SEED']`
    :param floor: samples with :math:`|F|\\le floor` are considered underflows
    :return: a :class:`VanishingOrder`
    """
    assert n_eps >= 8, 'at least 8 scales are required'
    eps = np.logspace(np.log10(eps_range[0]), np.log10(eps_range[1]), n_eps)
    U = unit_directions(directions, dim, seed=seed)
    points = np.asarray([e * u for u in U for e in eps])
    values = np.abs(parallel(evalF, points, n_jobs=n_jobs)).reshape(directions, n_eps)
    rows = []
    for i, u in enumerate(U):
        skipped = bool(np.any(values[i] <= floor))
        slope = np.nan if skipped else loglog_slope(eps, values[i])
        rows.append({'direction': i, 'slope': slope, 'skipped': skipped})
    frame = pd.DataFrame(rows)
    if frame.skipped.any() and not frame.skipped.all():
        warnings.warn(f'{int(frame.skipped.sum())} directions skipped (samples below {floor})', ConditioningWarning)
    return VanishingOrder(frame, M + 1 - margin)


def _bracket_from_gradients(gf, gg):
    # {f,g} = sum_j (f_y g_x - f_x g_y)
    J = symplectic_form(len(gf) // 2)
    return float(gf @ (-J) @ gg)


def quadratic_brackets_residual(spec):
    """Largest coefficient of the Poisson brackets :math:`\\{Q_i,Q_j\\}` of the quadratic invariants (exactly 0)"""
    Q = quadratic_invariants(spec)
    return max((poisson_bracket(Qi, Qj).max_abs() for Qi, Qj in itertools.combinations(Q, 2)), default=0.)


def involution_test(spec, gen, cfg=None, points=None, n_points=10, seed=None, method='variational'):
    """
    Poisson brackets :math:`\\{Q_i\\circ\\Psi, Q_j\\circ\\Psi\\}`, `i<j`, at sample points, with gradients
    :math:`D\\Psi^T\\nabla Q_k(\\Psi(p))`.

    :param points: sample points; if None, `n_points` random points in the unit ball
    :param method: how :math:`D\\Psi` is computed ('variational' or 'central')
    :return: pd.DataFrame with columns `point`, `i`, `j`, `bracket`
    """
    cfg = cfg or FlowConfig()
    if points is None:
        points = unit_ball_points(n_points, 2 * spec.n, seed=seed)
    Q = quadratic_invariants(spec)
    rows = []
    for t, p in enumerate(np.atleast_2d(points)):
        if method == 'variational':
            image, A = flow_with_jacobian(p, gen, cfg)
        else:
            image, A = flow_forward(p, gen, cfg), jacobian(p, gen, cfg, method='central')
        grads = [A.T @ np.real(Qk.gradient(image)) for Qk in Q]
        for i, j in itertools.combinations(range(len(Q)), 2):
            rows.append({'point': t, 'i': i, 'j': j, 'bracket': _bracket_from_gradients(grads[i], grads[j])})
    return pd.DataFrame(rows, columns=['point', 'i', 'j', 'bracket'])


class Conservation:
    """
    Result of :meth:`conservation_test`.

    :param frame: pd.DataFrame indexed by time with one column per first integral and a column `H`
    :param names: names of the first-integral columns
    """

    def __init__(self, frame, names):
        self.frame = frame
        self.names = names

    @staticmethod
    def _drift(series, floor=1e-300):
        series = series.to_numpy()
        return float(np.max(np.abs(series - series[0])) / max(abs(series[0]), floor))

    @property
    def integral_drift(self):
        """Largest relative drift over the first integrals"""
        return max((self._drift(self.frame[c]) for c in self.names), default=0.)

    @property
    def hamiltonian_drift(self):
        return self._drift(self.frame['H'])

    @property
    def truncated(self):
        return bool(self.frame.attrs.get('truncated', False))


def conservation_test(spec, N, gen, cfg=None, point=None, T=50., dt=1., method='direct', rtol=1e-10, atol=1e-12,
                      n_jobs=None):
    """
    Integrates the flow of :math:`N\\circ\\Psi` and tracks the first integrals :math:`Q_k\\circ\\Psi` and the
    Hamiltonian value along it.

    :param point: the initial point (default: `0.3` times a random unit direction)
    :param method: see :meth:`avint.globalize.trajectory`; the default 'direct' integrates the vector field of
        :math:`N\\circ\\Psi` numerically, while 'conjugate' only measures how well :math:`\\Psi` is inverted
    :param rtol: relative tolerance of the direct integration
    :param atol: absolute tolerance of the direct integration
    :return: a :class:`Conservation`
    """
    cfg = cfg or FlowConfig()
    if point is None:
        point = 0.3 * unit_directions(1, 2 * spec.n)[0]
    expected = int(np.floor(T / dt + 1e-9)) + 1
    times, states = trajectory(point, N, gen, cfg, T=T, dt=dt, method=method, rtol=rtol, atol=atol,
                                n_jobs=n_jobs)
    images = flow_many(states, gen, cfg, n_jobs=n_jobs)
    names = quadratic_invariant_names(spec)
    Q = quadratic_invariants(spec)
    data = {name: np.real(Qk(images)) for name, Qk in zip(names, Q)}
    data['H'] = N(images)
    frame = pd.DataFrame(data, index=pd.Index(times, name='t'))
    frame.attrs['truncated'] = len(times) < expected
    return Conservation(frame, names)
