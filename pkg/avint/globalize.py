"""
Global realization of the normalizing map. The generator :math:`K(\\delta)` is replaced by the bounded Hamiltonian
:math:`L=P\\,e^{-(x^2+y^2)}`, which agrees with `K` up to terms of degree `M+1` at the origin, and whose
:math:`\\delta`-flow is defined for every starting point. Its limit map :math:`\\Psi` carries `H` to
:math:`N+O_{M+1}`, so that `N∘Ψ` is a completely integrable Hamiltonian with `N∘Ψ - H = O_{M+1}`.
"""

import math
import warnings

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

import avint as av
from avint.averaging import EvolvingPolynomial
from avint.complexify import ThetaMap, to_real
from avint.error import FlowError, ConditioningWarning
from avint.functional import symplectic_form
from avint.polyalg import ComplexPolynomial, LinearMap2n, split_key
from avint.spectrum import quadratic_invariants
from avint.util import parallel, unit_directions


# Mollifier
# ------------------------------------
def squared_radius(n):
    """The polynomial :math:`\\sum_j(x_j^2+y_j^2)`"""
    return ComplexPolynomial._build(n, {tuple(2 * int(i == j) for i in range(2 * n)): 1. for j in range(2 * n)})


def gaussian_series(n, degree, sign=1):
    """
    Taylor polynomial of :math:`e^{\\pm(x^2+y^2)}` through total degree `degree`.

    :param n: degrees of freedom
    :param degree: highest total degree kept
    :param sign: +1 or -1
    :return: a :class:`avint.polyalg.ComplexPolynomial`
    """
    r2 = squared_radius(n)
    series = ComplexPolynomial.constant(n, 1.)
    power = ComplexPolynomial.constant(n, 1.)
    for m in range(1, degree // 2 + 1):
        power = power * r2
        series = series + power * (sign ** m / math.factorial(m))
    return series


def mollify(K: ComplexPolynomial, M):
    """
    The polynomial part (degree at most `M`) of :math:`K\\,e^{x^2+y^2}`, so that
    :math:`P\\,e^{-(x^2+y^2)}=K+O_{M+1}`. The map is linear in `K`.

    :param K: a :class:`avint.polyalg.ComplexPolynomial` of degree at most `M`, in real coordinates
    :param M: the working order
    :return: a :class:`avint.polyalg.ComplexPolynomial`
    """
    if K.is_zero():
        return K
    if K.degree > M:
        raise ValueError(f'the generator has degree {K.degree} > M={M}')
    series = gaussian_series(K.n, M - K.min_degree())
    return (K * series).truncate(M)


def mollifier_order(K: ComplexPolynomial, P: ComplexPolynomial, M, tol=1e-13):
    """
    Minimal degree of :math:`P\\,e^{-(x^2+y^2)}-K`, expanded through degree `M+2`, after dropping coefficients below
    `tol` (relative to the largest coefficient of `K`).

    :return: int or `math.inf`
    """
    if P.is_zero():
        return (-K).chop(tol).min_degree()
    expansion = (P * gaussian_series(P.n, M + 2 - P.min_degree(), sign=-1)).truncate(M + 2)
    return (expansion - K).chop(tol * max(1., K.max_abs())).min_degree()


# Monomial basis
# ------------------------------------
class MonomialBasis:
    """
    Fast evaluation of a fixed list of real monomials together with their first and second derivatives.

    :param keys: list of keys (tuples of `2n` ints)
    :param n: degrees of freedom
    """

    def __init__(self, keys, n):
        self.n = n
        self.keys = list(keys)
        dim = 2 * n
        E = np.asarray(self.keys, dtype=int).reshape(len(self.keys), dim)
        I = np.eye(dim, dtype=int)
        self.E = E
        self.E1 = np.maximum(E[:, None, :] - I[None, :, :], 0)                      # (T, i, var)
        self.E2 = np.maximum(E[:, None, None, :] - I[None, :, None, :] - I[None, None, :, :], 0)  # (T, i, j, var)
        self.F1 = E.astype(float)                                                    # (T, i)
        self.F2 = E[:, :, None] * (E[:, None, :] - I[None, :, :])                    # (T, i, j)

    def __len__(self):
        return len(self.keys)

    def values(self, p):
        return np.prod(p ** self.E, axis=-1)

    def gradients(self, p):
        return self.F1 * np.prod(p ** self.E1, axis=-1)

    def hessians(self, p):
        return self.F2 * np.prod(p ** self.E2, axis=-1)


# Generator
# ------------------------------------
class MollifiedGenerator:
    """
    The (optionally mollified) generator in real coordinates, with coefficients known in closed form in
    :math:`\\delta`: :math:`L(x,y,\\delta)=P(x,y,\\delta)e^{-(x^2+y^2)}` if `gaussian`, or :math:`K(x,y,\\delta)`
    otherwise.

    :param ev: the :class:`avint.averaging.EvolvingPolynomial` solution of the averaging system (complex
        coordinates)
    :param theta: the :class:`avint.complexify.ThetaMap` of the model
    :param M: the working order
    :param gaussian: whether to mollify (True) or to use the polynomial generator as is (False)
    """

    def __init__(self, ev, theta, M, gaussian=True):
        self.n = ev.n
        self.M = M
        self.gaussian = gaussian
        K_hat = ev.generator()
        self.min_rate = K_hat.slowest_rate()
        cache = {}

        def real_image(key):
            if key not in cache:
                alpha, beta = split_key(key)
                cache[key] = to_real(ComplexPolynomial.monomial(alpha, beta), theta)
            return cache[key]

        self.K = K_hat.transform(real_image)
        self.P = self.K.transform(lambda key: mollify(ComplexPolynomial._build(self.n, {key: 1.}), M)) \
            if gaussian else self.K
        self.basis = MonomialBasis(self.P.key_list, self.n)

    @classmethod
    def zero(cls, n, M, gaussian=True):
        """The identically zero generator (its flow is the identity)"""
        I = LinearMap2n.identity(n)
        return cls(EvolvingPolynomial(n, M, np.zeros(n), {}), ThetaMap(I, I, 0, 0), M, gaussian)

    def is_zero(self):
        return len(self.basis) == 0

    def K_at(self, delta):
        """The real polynomial generator :math:`K(\\delta)`"""
        return self.K.at(delta).real()

    def P_at(self, delta):
        """The polynomial factor :math:`P(\\delta)` of `L` (equal to :math:`K(\\delta)` when not mollified)"""
        return self.P.at(delta).real()

    def _coefficients(self, delta):
        return self.P.coefficient_values(delta).real

    def __call__(self, point, delta):
        """Value of `L` (or `K`) at a point"""
        p = np.asarray(point, dtype=float)
        value = self._coefficients(delta) @ self.basis.values(p) if len(self.basis) else 0.
        if self.gaussian:
            value *= np.exp(-p @ p)
        return float(value)

    def gradient(self, delta, p):
        if not len(self.basis):
            return np.zeros(2 * self.n)
        a = self._coefficients(delta)
        gradP = a @ self.basis.gradients(p)
        if not self.gaussian:
            return gradP
        P = a @ self.basis.values(p)
        return (gradP - 2 * p * P) * np.exp(-p @ p)

    def hessian(self, delta, p):
        dim = 2 * self.n
        if not len(self.basis):
            return np.zeros((dim, dim))
        a = self._coefficients(delta)
        hessP = np.tensordot(a, self.basis.hessians(p), axes=1)
        if not self.gaussian:
            return hessP
        P = a @ self.basis.values(p)
        gradP = a @ self.basis.gradients(p)
        out = hessP - 2 * (np.outer(gradP, p) + np.outer(p, gradP)) + P * (4 * np.outer(p, p) - 2 * np.eye(dim))
        return out * np.exp(-p @ p)

    def field(self, delta, p):
        """Hamiltonian vector field :math:`(\\partial L/\\partial y,-\\partial L/\\partial x)`"""
        g = self.gradient(delta, p)
        return np.concatenate([g[self.n:], -g[:self.n]])

    def __repr__(self):
        kind = 'mollified' if self.gaussian else 'polynomial'
        return f'MollifiedGenerator({kind}, n={self.n}, M={self.M}, n_monomials={len(self.basis)})'


class FlowConfig:
    """
    Numerical settings for the flow of the generator.

    :param delta_max: final averaging time; if None, `environ['DELTA_MAX_FACTOR']` divided by the slowest decay
        rate of the generator, capped (with a warning) at `environ['DELTA_MAX_CAP']`
    :param method: integration method of `scipy.integrate.solve_ivp` (default 'DOP853', an explicit adaptive
        embedded pair)
    :param rtol: relative tolerance (default `environ['RTOL']`)
    :param atol: absolute tolerance (default `environ['ATOL']`); the flow of a point integrates its displacement,
        with the tolerance scaled by `min(1, |point|)**2`, so that points close to the origin are integrated to the
        same relative accuracy
    :param fd_step: relative finite-difference step (default `environ['FD_STEP']`)
    :param gradient: how the gradient of `N∘Ψ` is obtained in trajectories: 'variational' or 'central'
    """

    def __init__(self, delta_max=None, method='DOP853', rtol=None, atol=None, fd_step=None, gradient='variational'):
        assert gradient in {'variational', 'central'}, f'unknown gradient method {gradient}'
        self.delta_max = delta_max
        self.method = method
        self.rtol = av._get_tol('RTOL', rtol)
        self.atol = av._get_tol('ATOL', atol)
        self.fd_step = av._get_tol('FD_STEP', fd_step)
        self.gradient = gradient

    def resolve_delta_max(self, gen: MollifiedGenerator):
        if self.delta_max is not None:
            return float(self.delta_max)
        if not np.isfinite(gen.min_rate):
            return 0.
        delta_max = av.environ['DELTA_MAX_FACTOR'] / gen.min_rate
        cap = av.environ['DELTA_MAX_CAP']
        if delta_max > cap:
            warnings.warn(f'delta_max={delta_max:.3e} capped at {cap:.3e} (slowest rate {gen.min_rate:.3e})',
                          ConditioningWarning)
            delta_max = cap
        return delta_max

    def doubled(self, gen):
        """A copy of this configuration with twice the final averaging time"""
        return FlowConfig(2 * self.resolve_delta_max(gen), self.method, self.rtol, self.atol, self.fd_step,
                          self.gradient)

    def __repr__(self):
        return (f'FlowConfig(delta_max={self.delta_max}, method={self.method!r}, rtol={self.rtol}, '
                f'atol={self.atol}, fd_step={self.fd_step}, gradient={self.gradient!r})')


# Flows
# ------------------------------------
def _integrate(rhs, y0, span, cfg, atol=None):
    sol = solve_ivp(rhs, span, y0, method=cfg.method, rtol=cfg.rtol, atol=cfg.atol if atol is None else atol)
    if not sol.success:
        raise FlowError(f'integration over {span} failed: {sol.message}')
    return sol.y[:, -1]


def _flow(point, gen, cfg, backward):
    cfg = cfg or FlowConfig()
    p = np.array(point, dtype=float)
    if p.shape != (2 * gen.n,):
        raise ValueError(f'the point has shape {p.shape}, expected {(2*gen.n,)}')
    if not np.all(np.isfinite(p)):
        raise ValueError('the point is not finite')
    delta_max = cfg.resolve_delta_max(gen)
    if gen.is_zero() or delta_max == 0 or not p.any():
        return p
    span = (delta_max, 0.) if backward else (0., delta_max)
    # the displacement q = image - p is integrated, so that the tolerances are relative to it; near the origin it
    # is O(|p|^2)
    size = min(1., np.linalg.norm(p))
    q = _integrate(lambda delta, q: gen.field(delta, p + q), np.zeros_like(p), span, cfg,
                   atol=cfg.atol * max(size ** 2, 1e-24))
    return p + q


def flow_forward(point, gen: MollifiedGenerator, cfg: FlowConfig = None):
    """
    The map :math:`\\Psi`: integrates :math:`\\dot x=\\partial L/\\partial y,\\ \\dot y=-\\partial L/\\partial x` from
    :math:`\\delta=0` to `delta_max`.

    :param point: array-like of `2n` reals
    :param gen: a :class:`MollifiedGenerator`
    :param cfg: a :class:`FlowConfig` (default settings if None)
    :return: np.ndarray of `2n` reals
    """
    return _flow(point, gen, cfg, backward=False)


def flow_backward(point, gen: MollifiedGenerator, cfg: FlowConfig = None):
    """
    The map :math:`\\Psi^{-1}`: integrates the same field from `delta_max` down to 0.
    """
    return _flow(point, gen, cfg, backward=True)


def flow_many(points, gen, cfg=None, backward=False, n_jobs=None):
    """
    Flows many points (in parallel if `n_jobs > 1`).

    :return: np.ndarray of shape `(n_points, 2n)`
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return parallel(_FlowJob(gen, cfg, backward), points, n_jobs=n_jobs)


class _FlowJob:
    # picklable callable for joblib
    def __init__(self, gen, cfg, backward):
        self.gen, self.cfg, self.backward = gen, cfg, backward

    def __call__(self, point):
        return _flow(point, self.gen, self.cfg, self.backward)


def flow_with_jacobian(point, gen: MollifiedGenerator, cfg: FlowConfig = None, backward=False):
    """
    Integrates the flow together with its variational equation :math:`\\dot\\Phi=J\\,\\nabla^2L\\,\\Phi`.

    :return: tuple `(image, jacobian)` with shapes `(2n,)` and `(2n, 2n)`
    """
    cfg = cfg or FlowConfig()
    dim = 2 * gen.n
    p = np.array(point, dtype=float)
    delta_max = cfg.resolve_delta_max(gen)
    if gen.is_zero() or delta_max == 0:
        return p, np.eye(dim)
    J = symplectic_form(gen.n)

    def rhs(delta, state):
        q, Phi = state[:dim], state[dim:].reshape(dim, dim)
        return np.concatenate([gen.field(delta, q), (J @ gen.hessian(delta, q) @ Phi).ravel()])

    span = (delta_max, 0.) if backward else (0., delta_max)
    state = _integrate(rhs, np.concatenate([p, np.eye(dim).ravel()]), span, cfg)
    return state[:dim], state[dim:].reshape(dim, dim)


def jacobian(point, gen: MollifiedGenerator, cfg: FlowConfig = None, method='central', backward=False):
    """
    Jacobian matrix of :math:`\\Psi` (or :math:`\\Psi^{-1}` if `backward`) at a point.

    :param method: 'central' for central finite differences with step `fd_step*(1+|point|)`, or 'variational'
    :return: np.ndarray of shape `(2n, 2n)`
    """
    cfg = cfg or FlowConfig()
    if method == 'variational':
        return flow_with_jacobian(point, gen, cfg, backward)[1]
    assert method == 'central', f'unknown method {method}'
    p = np.asarray(point, dtype=float)
    h = cfg.fd_step * (1 + np.linalg.norm(p))
    columns = []
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        columns.append((_flow(p + e, gen, cfg, backward) - _flow(p - e, gen, cfg, backward)) / (2 * h))
    return np.stack(columns, axis=1)


# Integrable Hamiltonian, perturbation and first integrals
# ------------------------------------
def eval_integrable_H(point, N, gen, cfg=None):
    """
    Value of the integrable Hamiltonian :math:`N\\circ\\Psi` at a point.

    :param N: a :class:`avint.averaging.NormalForm`
    """
    return float(N(flow_forward(point, gen, cfg)))


def eval_F(point, spec, N, gen, cfg=None):
    """
    Value of the integrable perturbation :math:`F=N\\circ\\Psi-(H_2+H_*)` at a point.

    :param spec: the :class:`avint.spectrum.ModelSpec`
    :param N: a :class:`avint.averaging.NormalForm`
    """
    return eval_integrable_H(point, N, gen, cfg) - float(np.real(spec.H(np.asarray(point, dtype=float))))


class PerturbationFunction:
    """
    Picklable callable `p -> F(p)` (see :meth:`eval_F`), suitable for :meth:`avint.util.parallel` with several workers.
    """

    def __init__(self, spec, N, gen, cfg=None):
        self.spec, self.N, self.gen, self.cfg = spec, N, gen, cfg

    def __call__(self, point):
        return eval_F(point, self.spec, self.N, self.gen, self.cfg)


def first_integrals(point, spec, gen, cfg=None):
    """
    The `n` first integrals :math:`Q_k\\circ\\Psi` at a point, with :math:`Q_k` the quadratic invariants of
    :meth:`avint.spectrum.quadratic_invariants`.

    :return: np.ndarray of `n` reals
    """
    image = flow_forward(point, gen, cfg)
    return np.asarray([np.real(Q(image)) for Q in quadratic_invariants(spec)])


def integrable_gradient(point, N, gen, cfg=None):
    """
    Gradient of :math:`N\\circ\\Psi`: :math:`D\\Psi^T\\nabla N(\\Psi(p))` with the variational Jacobian, or central
    finite differences of :meth:`eval_integrable_H` (according to `cfg.gradient`).
    """
    cfg = cfg or FlowConfig()
    p = np.asarray(point, dtype=float)
    if cfg.gradient == 'variational':
        image, A = flow_with_jacobian(p, gen, cfg)
        return A.T @ np.real(N.N.gradient(image))
    h = cfg.fd_step * (1 + np.linalg.norm(p))
    grad = np.zeros_like(p)
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        grad[i] = (eval_integrable_H(p + e, N, gen, cfg) - eval_integrable_H(p - e, N, gen, cfg)) / (2 * h)
    return grad


def integrable_vector_field(point, N, gen, cfg=None):
    """Hamiltonian vector field of :math:`N\\circ\\Psi` at a point"""
    g = integrable_gradient(point, N, gen, cfg)
    n = len(g) // 2
    return np.concatenate([g[n:], -g[:n]])


def normal_form_linear_flow(N, image):
    """
    Matrix `A` such that, along the flow of `N` through `image`, :math:`\\dot X=JAX`: since `N` is a function of the
    conserved quadratics :math:`Q_k=X^TS_kX/2`, :math:`\\nabla N=\\sum_k\\partial_kN\\,S_kX` with the partial
    derivatives frozen at their initial values.
    """
    n = N.spec.n
    q = np.asarray([np.real(Q(image)) for Q in N.quadratics])
    dN = np.real(N.invariant_polynomial.gradient(np.concatenate([q, np.zeros(n)])))[:n]
    A = np.zeros((2 * n, 2 * n))
    for k, Q in enumerate(N.quadratics):
        S = np.zeros((2 * n, 2 * n))
        for key, c in Q.items():
            idx = [i for i, e in enumerate(key) for _ in range(e)]
            i, j = idx
            S[i, j] += c.real
            S[j, i] += c.real
        A += dN[k] * S
    return A


def trajectory(point, N, gen, cfg=None, T=50., dt=0.1, method='conjugate', radius_bound=1e3, rtol=1e-10, atol=1e-12,
               n_jobs=None):
    """
    Trajectory of the integrable Hamiltonian :math:`N\\circ\\Psi` sampled at times `0, dt, 2dt, ...` (`floor(T/dt)+1`
    samples).

    :param method: 'conjugate' maps the point to normal-form coordinates, advances it with the exact (linear) flow
        of `N` and maps it back with :math:`\\Psi^{-1}`; 'direct' integrates the vector field of :math:`N\\circ\\Psi`
        (see :meth:`integrable_vector_field`), which is much slower
    :param radius_bound: the run is truncated if the state leaves this ball
    :param rtol: relative tolerance of the direct integration
    :param atol: absolute tolerance of the direct integration
    :return: tuple `(times, states)`, with `states` of shape `(len(times), 2n)`
    """
    cfg = cfg or FlowConfig()
    times = np.arange(int(np.floor(T / dt + 1e-9)) + 1) * dt
    p0 = np.asarray(point, dtype=float)
    if method == 'conjugate':
        X0 = flow_forward(p0, gen, cfg)
        JA = symplectic_form(N.spec.n) @ normal_form_linear_flow(N, X0)
        images = np.asarray([expm(t * JA) @ X0 for t in times])
        states = flow_many(images, gen, cfg, backward=True, n_jobs=n_jobs)
    elif method == 'direct':
        def escape(t, y):
            return radius_bound - np.linalg.norm(y)
        escape.terminal = True
        sol = solve_ivp(lambda t, y: integrable_vector_field(y, N, gen, cfg), (0., times[-1]), p0,
                        method=cfg.method, t_eval=times, rtol=rtol, atol=atol, events=escape)
        if sol.status == -1:
            raise FlowError(f'trajectory integration failed: {sol.message}')
        times, states = sol.t, sol.y.T
    else:
        raise ValueError(f'unknown method {method}')
    norms = np.linalg.norm(states, axis=1)
    if np.any(norms > radius_bound):
        last = int(np.argmax(norms > radius_bound))
        warnings.warn(f'the trajectory left the ball of radius {radius_bound} at t={times[last]}; run truncated',
                      ConditioningWarning)
        times, states = times[:last], states[:last]
    return times, states


def pullback_residual(point, spec, ev, theta, delta, cfg=None):
    """
    Energy consistency of averaging: flows a point with the polynomial generator `K` up to :math:`\\delta` and
    compares :math:`(H_2+\\mathcal H_*(\\delta))` at the image with `H` at the point. The residual is
    :math:`O(|point|^{M+1})`.

    :param ev: the :class:`avint.averaging.EvolvingPolynomial`
    :param theta: the :class:`avint.complexify.ThetaMap`
    :param delta: the averaging time
    :return: float
    """
    gen = MollifiedGenerator(ev, theta, ev.M, gaussian=False)
    cfg = FlowConfig(delta_max=delta, method=(cfg or FlowConfig()).method, rtol=1e-12, atol=1e-14)
    p = np.asarray(point, dtype=float)
    image = flow_forward(p, gen, cfg)
    H_delta = spec.H2 + to_real(ev.at(delta), theta).real()
    return abs(float(np.real(H_delta(image))) - float(np.real(spec.H(p))))


def pullback_check(points, spec, ev, theta, deltas=(0.5, 1., 5.), cfg=None):
    """
    Largest :meth:`pullback_residual` over the points and averaging times.
    """
    return max(pullback_residual(p, spec, ev, theta, d, cfg) for p in np.atleast_2d(points) for d in deltas)


def spatial_decay(gen: MollifiedGenerator, radius=10., delta=0., n_directions=16, seed=None):
    """
    Largest :math:`|L(x,y,\\delta)|\\,e^{(x^2+y^2)/2}` over random points on the sphere of the given radius.
    """
    points = radius * unit_directions(n_directions, 2 * gen.n, seed=seed)
    return max(abs(gen(p, delta)) * np.exp(radius ** 2 / 2) for p in points)
