"""Command-line interface: `avint <command> <model> [options]`"""

import argparse
import json
import sys
import warnings
from numbers import Complex, Integral, Real

import numpy as np

import avint as av
from avint.averaging import averaging_normal_form
from avint.data import BUILTIN_MODELS, fetch_model, parse_model
from avint.error import ConditioningWarning, ModelFormatError, ResonanceError
from avint.globalize import FlowConfig, MollifiedGenerator, PerturbationFunction, flow_many, trajectory
from avint.polyalg import split_key
from avint.spectrum import quadratic_invariant_names, quadratic_invariants
from avint.util import parallel, save_text_file, unit_ball_points, unit_directions
from avint.verify import ALL_CHECKS, properties, run_verification


SCHEMA_VERSION = 1

COMMANDS = ['normal-form', 'generator', 'build-F', 'verify', 'trajectory']
TRAJECTORY_METHODS = ['conjugate', 'direct']

EXIT_OK, EXIT_FORMAT, EXIT_RESONANCE, EXIT_VERIFICATION = 0, 2, 3, 4


class RunConfig:
    """
    Settings of a command-line run.

    :param M: the working order (at least 3)
    :param delta_max: final averaging time of the flow (None resolves it from the slowest decay rate)
    :param tol: relative tolerance of the flow integrator (default `environ['RTOL']`)
    :param seed: seed of the random points and directions (default `environ['SEED']`)
    :param out: path of the output report; None writes to the standard output
    :param points: for build-F, either a number of random points in the ball of radius `radius` or the path of a JSON
        file with a list of points
    :param radius: radius of the ball of the random build-F points
    :param T: final time of the trajectory
    :param dt: sampling step of the trajectory
    :param method: how the trajectory is computed, 'conjugate' or 'direct' (see :meth:`avint.globalize.trajectory`)
    :param checks: names of the verification checks to run (all if None)
    :param n_jobs: number of parallel workers (default `environ['N_JOBS']`)
    :param verbose: set to True to get information through the stdout
    """

    def __init__(self, M, delta_max=None, tol=None, seed=None, out=None, points=10, radius=0.1, T=50., dt=0.1,
                 method='conjugate', checks=None, n_jobs=None, verbose=False):
        if M < 3:
            raise ValueError(f'the working order must be at least 3 (found M={M})')
        if dt <= 0 or T < 0:
            raise ValueError(f'expected T >= 0 and dt > 0 (found T={T}, dt={dt})')
        if method not in TRAJECTORY_METHODS:
            raise ValueError(f'unknown trajectory method {method!r}; valid ones are {TRAJECTORY_METHODS}')
        self.M = int(M)
        self.delta_max = delta_max
        self.tol = tol
        self.seed = av.environ['SEED'] if seed is None else seed
        self.out = out
        self.points = points
        self.radius = radius
        self.T = T
        self.dt = dt
        self.method = method
        if checks is not None:
            unknown = sorted(set(checks) - set(ALL_CHECKS))
            if unknown:
                raise ValueError(f'unknown checks {unknown}; valid ones are {list(ALL_CHECKS)}')
        self.checks = checks
        self.n_jobs = av._get_njobs(n_jobs)
        self.verbose = verbose

    def flow_config(self):
        return FlowConfig(delta_max=self.delta_max, rtol=self.tol)


def _sout(cfg, msg):
    if cfg.verbose:
        print(f'[avint]: {msg}', file=sys.stderr)


def load_model(model):
    """
    Loads a model from a file path, or a built-in one given as `builtin:<name>`.

    :param model: str
    :return: a :class:`avint.spectrum.ModelSpec`
    """
    if model.startswith('builtin:'):
        name = model[len('builtin:'):]
        if name not in BUILTIN_MODELS:
            raise ModelFormatError([f'unknown built-in model {name!r}; valid ones are {BUILTIN_MODELS}'])
        return fetch_model(name)
    return parse_model(model)


def _terms(p, real=False):
    out = []
    for key, c in p.items():
        alpha, beta = split_key(key)
        out.append({'alpha': list(alpha), 'beta': list(beta), 'coef': float(c.real) if real else complex(c)})
    return out


def _invariant_terms(p):
    return [{'powers': list(split_key(key)[0]), 'coef': float(c.real)} for key, c in p.items()]


def _normal_form(spec, cfg):
    nf, ev, theta = averaging_normal_form(spec, cfg.M, verbose=cfg.verbose)
    _sout(cfg, f'normal form of order {cfg.M} computed ({len(ev)} evolving coefficients)')
    return nf, ev, theta


def _command_normal_form(spec, cfg):
    nf, _, _ = _normal_form(spec, cfg)
    return {
        'mu': [complex(m) for m in nf.mu],
        'N_real': _terms(nf.N, real=True),
        'N_complex': _terms(nf.N_hat),
        'invariants': quadratic_invariant_names(spec),
        'invariant_polynomial': _invariant_terms(nf.invariant_polynomial),
        'action_polynomial': _invariant_terms(nf.action_polynomial),
        'reality_residual': nf.reality_residual,
    }


def _command_generator(spec, cfg):
    _, ev, theta = _normal_form(spec, cfg)
    gen = MollifiedGenerator(ev, theta, cfg.M)
    final = cfg.delta_max if cfg.delta_max is not None else 10.
    samples = [{'delta': float(d), 'K': _terms(gen.K_at(d), real=True)} for d in np.linspace(0., final, 11)]
    fitted, slowest = properties.generator_decay(ev)
    return {
        'samples': samples,
        'fitted_rate': fitted,
        'slowest_rate': slowest,
        'zero': gen.is_zero(),
    }


def _resolve_points(spec, cfg):
    if isinstance(cfg.points, Integral) or (isinstance(cfg.points, str) and cfg.points.isdigit()):
        return unit_ball_points(int(cfg.points), 2 * spec.n, radius=cfg.radius, seed=cfg.seed)
    with open(cfg.points, 'rt') as fin:
        points = np.atleast_2d(np.asarray(json.load(fin), dtype=float))
    if points.shape[1] != 2 * spec.n:
        raise ValueError(f'the points must have {2*spec.n} coordinates (found {points.shape[1]})')
    return points


def _command_build_F(spec, cfg):
    nf, ev, theta = _normal_form(spec, cfg)
    gen = MollifiedGenerator(ev, theta, cfg.M)
    flow_cfg = cfg.flow_config()
    points = _resolve_points(spec, cfg)
    F = PerturbationFunction(spec, nf, gen, flow_cfg)
    values = parallel(F, points, n_jobs=cfg.n_jobs) if len(points) else np.zeros(0)
    vanishing = properties.vanishing_order_test(F, cfg.M, 2 * spec.n, seed=cfg.seed, n_jobs=cfg.n_jobs)
    return {
        'points': points.tolist(),
        'F': [float(v) for v in values],
        'vanishing_order': {
            'slopes': [None if s != s else float(s) for s in vanishing.frame.slope],
            'skipped': [bool(s) for s in vanishing.frame.skipped],
            'min_slope': vanishing.min_slope,
            'threshold': vanishing.threshold,
            'identically_small': vanishing.identically_small,
        },
    }


def _command_verify(spec, cfg):
    report = run_verification(spec, cfg.M, cfg.flow_config(), seed=cfg.seed, checks=cfg.checks,
                              n_jobs=cfg.n_jobs, verbose=cfg.verbose)
    _sout(cfg, f'\n{report}')
    return report.to_dict()


def _command_trajectory(spec, cfg):
    nf, ev, theta = _normal_form(spec, cfg)
    gen = MollifiedGenerator(ev, theta, cfg.M)
    flow_cfg = cfg.flow_config()
    point = 0.3 * unit_directions(1, 2 * spec.n, seed=cfg.seed)[0]
    times, states = trajectory(point, nf, gen, flow_cfg, T=cfg.T, dt=cfg.dt, method=cfg.method,
                               n_jobs=cfg.n_jobs)
    images = flow_many(states, gen, flow_cfg, n_jobs=cfg.n_jobs)
    names = quadratic_invariant_names(spec)
    integrals = np.real(np.column_stack([Q(images) for Q in quadratic_invariants(spec)]))
    H = nf(images)
    rows = [{'t': float(t), 'state': s.tolist(), 'integrals': dict(zip(names, q.tolist())), 'H': float(h)}
            for t, s, q, h in zip(times, states, integrals, np.atleast_1d(H))]
    return {'initial_point': point.tolist(), 'rows': rows}


_COMMANDS = {
    'normal-form': _command_normal_form,
    'generator': _command_generator,
    'build-F': _command_build_F,
    'verify': _command_verify,
    'trajectory': _command_trajectory,
}


def run_command(command, spec, cfg: RunConfig):
    """
    Runs a command on a model.

    :param command: one of 'normal-form', 'generator', 'build-F', 'verify', 'trajectory'
    :param spec: a :class:`avint.spectrum.ModelSpec`
    :param cfg: a :class:`RunConfig`
    :return: dict, the report (see :meth:`emit_report`)
    """
    if command not in _COMMANDS:
        raise ValueError(f'unknown command {command}; valid ones are {COMMANDS}')
    report = {'command': command, 'model': spec.name, 'M': cfg.M, 'seed': cfg.seed}
    report.update(_COMMANDS[command](spec, cfg))
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, Integral):
        return int(obj)
    if isinstance(obj, Real):
        obj = float(obj)
        return obj if np.isfinite(obj) else None
    if isinstance(obj, Complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def format_report(report):
    """
    Serializes a report to JSON text: keys are sorted, floats use their shortest round-trip representation,
    complex numbers become `[re, im]` pairs and non-finite values become `null`.

    :param report: dict
    :return: str
    """
    doc = dict(_jsonable(report))
    doc['schema_version'] = SCHEMA_VERSION
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + '\n'


def emit_report(report, path=None):
    """
    Writes a report (see :meth:`format_report`) to a file, or to the standard output if `path` is None.

    :param report: dict
    :param path: output path (parent directories are created)
    """
    text = format_report(report)
    if path is None:
        sys.stdout.write(text)
    else:
        save_text_file(path, text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='avint',
        description='Birkhoff normal forms by continuous averaging and integrable perturbations of polynomial '
                    'Hamiltonians.'
    )
    parser.add_argument('command', choices=COMMANDS, help='what to compute')
    parser.add_argument('model', help='path of a model file (JSON), or builtin:<name> with <name> in '
                                      f'{", ".join(BUILTIN_MODELS)}')
    parser.add_argument('-M', '--order', type=int, default=4, dest='M', help='working order (default: 4)')
    parser.add_argument('--delta-max', type=float, default=None, dest='delta_max',
                        help='final averaging time of the flow (default: resolved from the slowest decay rate)')
    parser.add_argument('--tol', type=float, default=None,
                        help=f'relative tolerance of the flow integrator (default: {av.environ["RTOL"]:g})')
    parser.add_argument('--seed', type=int, default=None, help='seed of random points and directions')
    parser.add_argument('--out', default=None, help='output path of the report (default: standard output)')
    parser.add_argument('--points', default='10',
                        help='build-F: number of random points, or path of a JSON list of points (default: 10)')
    parser.add_argument('--radius', type=float, default=0.1, help='build-F: radius of the random points')
    parser.add_argument('--T', type=float, default=50., dest='T', help='trajectory: final time (default: 50)')
    parser.add_argument('--dt', type=float, default=0.1, help='trajectory: sampling step (default: 0.1)')
    parser.add_argument('--method', choices=TRAJECTORY_METHODS, default='conjugate',
                        help='trajectory: conjugation by the normalizing map or direct integration (default: conjugate)')
    parser.add_argument('--checks', default=None, help='verify: comma-separated names of the checks to run')
    parser.add_argument('-v', '--verbose', action='store_true', help='show progress information')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    checks = None if args.checks is None else [c for c in args.checks.split(',') if c]
    try:
        cfg = RunConfig(args.M, delta_max=args.delta_max, tol=args.tol, seed=args.seed, out=args.out,
                        points=args.points, radius=args.radius, T=args.T, dt=args.dt, method=args.method,
                        checks=checks, verbose=args.verbose)
    except ValueError as e:
        print(f'avint: error: {e}', file=sys.stderr)
        return EXIT_FORMAT
    try:
        with warnings.catch_warnings():
            if not cfg.verbose:
                warnings.simplefilter('ignore', ConditioningWarning)
            spec = load_model(args.model)
            report = run_command(args.command, spec, cfg)
    except ModelFormatError as e:
        print(f'avint: {e}', file=sys.stderr)
        return EXIT_FORMAT
    except ResonanceError as e:
        print(f'avint: resonance abort: {e}', file=sys.stderr)
        print(f'avint: resonant vector k={list(e.k)}', file=sys.stderr)
        return EXIT_RESONANCE

    emit_report(report, cfg.out)
    if args.command == 'verify' and not report['passed']:
        return EXIT_VERIFICATION
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
