from enum import Enum
from time import time

import numpy as np
import pandas as pd
from tqdm import tqdm

import avint as av
from avint.averaging import normal_form_limit, solve_triangular
from avint.complexify import build_theta, to_complex
from avint.globalize import FlowConfig, MollifiedGenerator, PerturbationFunction, spatial_decay
from avint.polyalg import ComplexPolynomial
from avint.spectrum import divisor_scan, eigenvalues
from avint.util import unit_ball_points, unit_directions
from avint.verify import oracles, properties


class Status(Enum):
    PASS = 'pass'
    FAIL = 'fail'
    SKIPPED = 'skipped'
    ERROR = 'error'


class SkipCheck(Exception):
    """Raised by a check that does not apply to the model at hand"""


ALL_CHECKS = (
    'divisor_scan', 'theta_map', 'h2_complexification', 'initial_condition', 'decay_law', 'ode_oracle',
    'flow_consistency', 'coupling_formula', 'reality', 'cross_oracle', 'normal_form_reality', 'invariant_expression',
    'generator_decay', 'mollifier_order', 'flow_roundtrip', 'symplecticity', 'tail', 'spatial_decay',
    'vanishing_order', 'conservation', 'energy', 'involution',
)


class VerificationReport:
    """
    One row per enabled check, with its status, the measured residual, the tolerance it is compared against
    (`comparison` tells whether the residual must be below or above it) and the runtime in seconds.

    :param model: name of the model
    :param M: the working order
    :param seed: the seed of the random points and directions
    """

    COLUMNS = ['name', 'status', 'residual', 'tolerance', 'comparison', 'runtime']

    def __init__(self, model=None, M=None, seed=None):
        self.model = model
        self.M = M
        self.seed = seed
        self.rows = []

    def add(self, name, status: Status, residual=np.nan, tolerance=np.nan, comparison='<=', runtime=0., msg=''):
        assert name not in {r['name'] for r in self.rows}, f'check {name} reported twice'
        self.rows.append({'name': name, 'status': status.value, 'residual': float(residual),
                          'tolerance': float(tolerance), 'comparison': comparison, 'runtime': float(runtime),
                          'msg': msg})

    @property
    def frame(self):
        return pd.DataFrame(self.rows, columns=self.COLUMNS + ['msg'])

    @property
    def failed(self):
        """Names of the checks that failed or raised an error"""
        return [r['name'] for r in self.rows if r['status'] in (Status.FAIL.value, Status.ERROR.value)]

    @property
    def passed(self):
        return len(self.failed) == 0

    def to_dict(self, include_runtime=False):
        checks = []
        for r in self.rows:
            row = {k: r[k] for k in ('name', 'status', 'residual', 'tolerance', 'comparison')}
            if r['msg']:
                row['msg'] = r['msg']
            if include_runtime:
                row['runtime'] = r['runtime']
            checks.append(row)
        return {'model': self.model, 'M': self.M, 'seed': self.seed, 'passed': self.passed, 'checks': checks}

    def __str__(self):
        return self.frame.drop(columns='msg').to_string(index=False)


class Verifier:
    """
    Runs the verification checks on a model: averaging against independent oracles, reality and consistency of the
    closed-form solution, properties of the mollified flow, vanishing order of `F` and integrability of `N∘Ψ`.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :param M: the working order
    :param cfg: a :class:`avint.globalize.FlowConfig` (default settings if None)
    :param seed: seed of the random points and directions; if None, `avint.environ['SEED']`
    :param n_points: number of random points for the flow checks
    :param n_directions: number of random directions of the vanishing-order test
    :param ode_step: step of the Runge-Kutta coefficient oracle
    :param ode_delta: final time of the Runge-Kutta coefficient oracle
    :param T: final time of the conservation run
    :param dt: sampling step of the conservation run
    :param trajectory_method: how the conservation run is computed (see :meth:`avint.globalize.trajectory`)
    :param n_jobs: number of parallel workers for point-wise evaluations
    :param raise_errors: if True, exceptions raised by a check are propagated; otherwise (default) the check is
        reported with status 'error'
    :param verbose: set to True to get information through the stdout
    """

    def __init__(self, spec, M, cfg=None, seed=None, n_points=10, n_directions=20, ode_step=1e-3, ode_delta=10.,
                 T=50., dt=1., trajectory_method='direct', n_jobs=None, raise_errors=False, verbose=False):
        if M < 3:
            raise ValueError(f'the working order must be at least 3 (found M={M})')
        self.spec = spec
        self.M = M
        self.cfg = cfg or FlowConfig()
        self.seed = av.environ['SEED'] if seed is None else seed
        self.n_points = n_points
        self.n_directions = n_directions
        self.ode_step = ode_step
        self.ode_delta = ode_delta
        self.T = T
        self.dt = dt
        self.trajectory_method = trajectory_method
        self.n_jobs = n_jobs
        self.raise_errors = raise_errors
        self.verbose = verbose

    def _sout(self, msg):
        if self.verbose:
            print(f'[{self.__class__.__name__}]: {msg}')

    def _build(self):
        # the resonance check comes first: solve_triangular raises ResonanceError
        self.mu = eigenvalues(self.spec)
        self.scan = divisor_scan(self.mu, self.M)
        self.scan.raise_if_resonant()
        self.theta = build_theta(self.spec)
        self.Hhat_star = to_complex(self.spec.Hstar, self.theta)
        tinit = time()
        self.ev = solve_triangular(self.Hhat_star, self.mu, self.M)
        self.nf = normal_form_limit(self.ev, self.spec, self.theta)
        self.gen = MollifiedGenerator(self.ev, self.theta, self.M)
        self._sout(f'averaging solved with {len(self.ev)} coefficients [took {time()-tinit:.3f}s]')
        self.points = unit_ball_points(self.n_points, 2 * self.spec.n, seed=self.seed)
        self.scale = max(1., self.Hhat_star.max_abs())

    def _error_handler(self, func):
        """
        Runs one check.

        :return: tuple `(out, status, msg, took)` where `out` is the output of the check (or None)
        """
        out, msg = None, ''
        tinit = time()
        try:
            out = func()
            status = Status.PASS if out[2] else Status.FAIL
        except SkipCheck as e:
            status, msg = Status.SKIPPED, str(e)
        except Exception as e:
            if self.raise_errors:
                raise e
            status, msg = Status.ERROR, f'{e.__class__.__name__}: {e}'
        took = time() - tinit
        return out, status, msg, took

    def run(self, checks=None):
        """
        Runs the checks.

        :param checks: names of the checks to run (see `ALL_CHECKS`); all of them if None
        :return: a :class:`VerificationReport`
        """
        checks = ALL_CHECKS if checks is None else tuple(checks)
        unknown = set(checks) - set(ALL_CHECKS)
        if unknown:
            raise ValueError(f'unknown checks {sorted(unknown)}; valid ones are {ALL_CHECKS}')
        report = VerificationReport(self.spec.name, self.M, self.seed)
        if not checks:
            return report
        self._build()
        for name in (tqdm(checks, desc='[verify]') if self.verbose else checks):
            out, status, msg, took = self._error_handler(getattr(self, f'check_{name}'))
            if out is None:
                report.add(name, status, runtime=took, msg=msg)
            else:
                residual, tolerance, _, comparison = out
                report.add(name, status, residual, tolerance, comparison, took, msg)
            self._sout(f'{name}: {status.value} [took {took:.3f}s]')
        return report

    # checks: each returns (residual, tolerance, passed, comparison)
    @staticmethod
    def _below(residual, tol):
        return residual, tol, bool(residual <= tol), '<='

    @staticmethod
    def _above(residual, tol):
        return residual, tol, bool(residual >= tol), '>='

    def check_divisor_scan(self):
        return self._above(self.scan.min_divisor, self.scan.divisor_tol)

    def check_theta_map(self):
        return self._below(max(self.theta.inversion_residual(), self.theta.symplectic_residual()), 1e-13)

    def check_h2_complexification(self):
        n = self.spec.n
        H2_hat = ComplexPolynomial._build(n, {tuple(int(i == j or i == n + j) for i in range(2 * n)): self.mu[j]
                                              for j in range(n)})
        return self._below((to_complex(self.spec.H2, self.theta) - H2_hat).max_abs(), 1e-12)

    def check_initial_condition(self):
        return self._below(properties.initial_condition_residual(self.ev, self.Hhat_star), 1e-14 * self.scale)

    def check_decay_law(self):
        if self.Hhat_star.is_zero() or self.spec.Hstar.degree != 3:
            raise SkipCheck('the nonlinear part is not purely cubic')
        return self._below(properties.decay_law_residual(self.ev, self.Hhat_star), 1e-13 * self.scale)

    def check_ode_oracle(self):
        grid = np.linspace(0., self.ode_delta, 21)
        trajectories = oracles.ode_coefficient_oracle(self.Hhat_star, self.mu, self.M, grid, step=self.ode_step)
        return self._below(trajectories.sup_gap(self.ev), 1e-8 * self.scale)

    def check_flow_consistency(self):
        return self._below(properties.flow_consistency_residual(self.ev), 1e-10 * self.scale ** 2)

    def check_coupling_formula(self):
        return self._below(properties.coupling_formula_residual(self.ev), 1e-10 * self.scale ** 2)

    def check_reality(self):
        residual, consistent = properties.reality_residual(self.ev, self.theta)
        residual, tol, passed, comparison = self._below(residual, 1e-11 * self.scale)
        return residual, tol, passed and consistent, comparison

    def check_cross_oracle(self):
        birkhoff = oracles.birkhoff_oracle(self.spec, self.M)
        return self._below(properties.cross_oracle_residual(self.nf, birkhoff), 1e-9)

    def check_normal_form_reality(self):
        return self._below(self.nf.reality_residual, 1e-12 * max(1., self.nf.N.max_abs()))

    def check_invariant_expression(self):
        return self._below(self.nf.check_invariant_expression(), 1e-10 * max(1., self.nf.N.max_abs()))

    def check_generator_decay(self):
        if not len(self.ev.generator()):
            raise SkipCheck('the generator is identically zero')
        fitted, slowest = properties.generator_decay(self.ev)
        return self._above(fitted, 0.9 * min(slowest, self.scan.min_rate))

    def check_mollifier_order(self):
        return self._above(properties.mollifier_min_order(self.gen), self.M + 1)

    def check_flow_roundtrip(self):
        return self._below(properties.roundtrip_residual(self.points, self.gen, self.cfg, self.n_jobs), 1e-9)

    def check_symplecticity(self):
        return self._below(properties.symplecticity_residual(self.points, self.gen, self.cfg, n_jobs=self.n_jobs), 1e-5)

    def check_tail(self):
        return self._below(properties.tail_residual(self.points, self.gen, self.cfg, self.n_jobs), 1e-10)

    def check_spatial_decay(self):
        return self._below(spatial_decay(self.gen, radius=10., seed=self.seed), 1e-10)

    def check_vanishing_order(self):
        cfg = FlowConfig(self.cfg.delta_max, self.cfg.method, rtol=min(self.cfg.rtol, 1e-12), atol=self.cfg.atol)
        F = PerturbationFunction(self.spec, self.nf, self.gen, cfg)
        result = properties.vanishing_order_test(F, self.M, 2 * self.spec.n,
                                                 directions=self.n_directions, seed=self.seed, n_jobs=self.n_jobs)
        self.vanishing_order = result
        if result.identically_small:
            raise SkipCheck('F is identically small')
        return self._above(result.min_slope, result.threshold)

    def _conservation(self):
        if not hasattr(self, 'conservation'):
            point = 0.3 * unit_directions(1, 2 * self.spec.n, seed=self.seed)[0]
            self.conservation = properties.conservation_test(self.spec, self.nf, self.gen, self.cfg, point,
                                                             T=self.T, dt=self.dt, method=self.trajectory_method,
                                                             n_jobs=self.n_jobs)
        return self.conservation

    def check_conservation(self):
        return self._below(self._conservation().integral_drift, 1e-6)

    def check_energy(self):
        return self._below(self._conservation().hamiltonian_drift, 1e-8)

    def check_involution(self):
        if self.spec.n < 2:
            raise SkipCheck('involution is trivial for one degree of freedom')
        frame = properties.involution_test(self.spec, self.gen, self.cfg, points=self.points)
        return self._below(float(np.max(np.abs(frame.bracket))), 1e-5)


def run_verification(spec, M, cfg=None, seed=None, checks=None, verbose=False, **kwargs):
    """
    Runs the verification checks on a model.

    :param spec: a :class:`avint.spectrum.ModelSpec`
    :param M: the working order
    :param cfg: a :class:`avint.globalize.FlowConfig`
    :param seed: seed of the random points and directions
    :param checks: names of the checks to run (all if None)
    :param verbose: set to True to get information through the stdout
    :param kwargs: further arguments of :class:`Verifier`
    :return: a :class:`VerificationReport`
    """
    return Verifier(spec, M, cfg, seed, verbose=verbose, **kwargs).run(checks)
