"""Command-line interface: ``bellaudit audit|simulate|bounds|lhv-fit``.

Exit codes: 0 success, 2 configuration or input error, 3 audit findings,
4 resource cap exceeded.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .bell import (chained_expression, chsh_expression, critical_visibility,
                   local_bound_by_enumeration, quantum_chained_value)
from .config import load_config
from .correlations import load_table, save_table
from .exceptions import CapExceededError, ConfigError
from .franson import (MAX_PAIRS, fit_fringe, fringe_from_summary,
                      quantum_postselected_table,
                      search_postselected_bound, simulate_run)
from .lhv import (ALLOWED_METHODS, MAX_STRATEGIES, CommonCauseModel,
                  model_to_dict, save_model)
from .metrics import deviance, total_variation
from .spacetime import (EventKind, Side, audit_experiment, frame_speed_scan,
                        receiver_from_schedule)
from .utils import logger, set_log_level

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FINDINGS = 3
EXIT_CAP = 4

MAX_CHAINED = 10


def _env_int(name, default):
    """Integer override from the environment."""
    value = os.environ.get(name)
    if value is None or value == '':
        return default
    try:
        value = int(value)
    except ValueError:
        raise ConfigError(['environment variable %s must be an integer, got '
                           '%r' % (name, value)])
    if value < 1:
        raise ConfigError(['environment variable %s must be >= 1, got %d'
                           % (name, value)])
    return value


def _jsonable(obj):
    """Plain JSON types; infinite floats become ``'inf'`` / ``'-inf'``."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if np.isinf(obj):
            return 'inf' if obj > 0 else '-inf'
        if np.isnan(obj):
            return None
        return obj
    return obj


def write_json(data, path=None):
    """Write ``data`` as sorted, indented JSON to ``path`` or stdout."""
    text = json.dumps(_jsonable(data), sort_keys=True, indent=2) + '\n'
    if path is None or path == '-':
        sys.stdout.write(text)
    else:
        with open(path, 'w', encoding='utf-8') as fid:
            fid.write(text)
        logger.info('wrote %s' % path)


def cmd_audit(args):
    config = load_config(args.config)
    if config.schedule is None:
        raise ConfigError(['the audit needs an experiment section'],
                          args.config)
    report = audit_experiment(config.schedule, tol=args.tol)
    data = report.to_dict()
    data['config'] = args.config
    if args.frames:
        oa = config.schedule.by_kind(EventKind.OUTCOME, Side.A)[0]
        ob = config.schedule.by_kind(EventKind.OUTCOME, Side.B)[0]
        axis = ob.x - oa.x
        norm = np.linalg.norm(axis)
        axis = axis / norm if norm > 0 else np.array([1., 0., 0.])
        betas = [b * axis for b in np.linspace(-0.99, 0.99, args.frames)]
        data['frame_scan'] = [dict(beta=list(beta), min_speed_c=speed)
                              for beta, speed in
                              frame_speed_scan(oa, ob, betas)]
    write_json(data, args.out or config.output.get('report'))
    return EXIT_OK if report.ok else EXIT_FINDINGS


def cmd_simulate(args):
    config = load_config(args.config)
    if config.franson is None:
        raise ConfigError(['the simulation needs a franson section'],
                          args.config)
    franson = config.franson
    if args.seed is not None:
        franson = dataclasses.replace(franson, seed=args.seed)
    if args.n_pairs is not None:
        franson = dataclasses.replace(franson, n_pairs=args.n_pairs)
    csv_path = args.csv or config.output.get('csv')
    if csv_path and franson.settings_b != 1:
        raise ConfigError(['the fringe CSV needs a single B phase, got %d'
                           % franson.settings_b], args.config)

    n_jobs = _env_int('BELLAUDIT_N_JOBS', 1)
    _, summary = simulate_run(franson, n_jobs=n_jobs, keep_records=False)
    data = summary.to_dict()
    # goodness of fit of the kept counts to the postselected prediction
    data['quantum_deviance'] = deviance(
        summary.counts, quantum_postselected_table(franson))
    if franson.settings_b == 1:
        frame = fringe_from_summary(summary)
        if csv_path:
            frame.to_csv(csv_path, index=False, float_format='%.17g')
            logger.info('wrote %s' % csv_path)
        if (frame['n_kept'] > 0).sum() >= 3:
            data['fringe_fit'] = dataclasses.asdict(
                fit_fringe(frame, franson.phases_b[0]))
    table_path = args.table_out or config.output.get('table')
    if table_path:
        pool = 'b' if franson.settings_b == 1 else None
        save_table(summary.to_table(pool_marginal=pool), table_path)
        logger.info('wrote %s' % table_path)
    write_json(data, args.out or config.output.get('summary'))
    return EXIT_OK


def cmd_bounds(args):
    if args.chained is not None:
        max_chained = _env_int('BELLAUDIT_MAX_CHAINED', MAX_CHAINED)
        if args.chained > max_chained:
            raise CapExceededError(args.chained, max_chained,
                                   'settings per side')
        expr = chained_expression(args.chained)
        n = args.chained
    else:
        expr, n = chsh_expression(), 2
    max_strategies = _env_int('BELLAUDIT_MAX_STRATEGIES', MAX_STRATEGIES)
    local, witness = local_bound_by_enumeration(
        expr, max_strategies=max_strategies, return_witness=True)
    quantum = quantum_chained_value(n)
    data = dict(expression=expr.name, local=local,
                declared_local=expr.local_bound,
                local_witness=dict(response_a=list(witness.response_a),
                                   response_b=list(witness.response_b)),
                quantum=quantum, critical_visibility=critical_visibility(n))
    if args.postselected:
        result = search_postselected_bound(
            expr, args.postselected, budget=args.budget, seed=args.seed,
            max_strategies=max_strategies,
            max_pairs=_env_int('BELLAUDIT_MAX_PAIRS', MAX_PAIRS))
        data['postselected'] = result.to_dict()
        data['postselected']['critical_visibility'] = result.value / quantum
        data['seed'] = args.seed
    write_json(data, args.out)
    return EXIT_OK


def _fit_receiver(args):
    """``--receiver`` if given, else the schedule's latest side, else A."""
    if args.receiver is not None:
        return args.receiver
    if args.config is None:
        return 'A'
    config = load_config(args.config)
    if config.schedule is None:
        raise ConfigError(['the receiver default needs an experiment '
                           'section'], args.config)
    return receiver_from_schedule(config.schedule)


def cmd_lhv_fit(args):
    table = load_table(args.table)
    ccm = CommonCauseModel(
        method=args.method, receiver=_fit_receiver(args),
        max_strategies=_env_int('BELLAUDIT_MAX_STRATEGIES', MAX_STRATEGIES))
    ccm.fit(table)
    data = dict(table=args.table, method=ccm.method_,
                shape=list(table.shape))
    if ccm.model_ is None:
        data['status'] = 'nonlocal'
        data['certificate'] = ccm.certificate_.to_dict()
        data['certificate']['checked'] = ccm.certificate_.check(table)
    else:
        data['status'] = 'local'
        data['n_components'] = len(ccm.model_)
        data['max_abs_error'] = ccm.score(table)
        data['total_variation'] = total_variation(ccm.predict(), table)
        data['model'] = model_to_dict(ccm.model_)
        if args.model_out:
            save_model(ccm.model_, args.model_out)
            logger.info('wrote %s' % args.model_out)
    write_json(data, args.out)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog='bellaudit',
        description='Audit Bell-type experiments: causal geometry, local '
                    'bounds, Franson simulations and common-cause fits.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='store_true',
                        help='log progress at INFO level')
    common.add_argument('--debug', action='store_true',
                        help='log at DEBUG level')
    common.add_argument('--out', default=None,
                        help='output JSON path (default: stdout)')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('audit', parents=[common],
                       help='light-cone audit of an experiment schedule')
    p.add_argument('config')
    p.add_argument('--tol', type=float, default=1.,
                   help='lightlike band on the squared interval (m^2)')
    p.add_argument('--frames', type=int, default=0,
                   help='number of collinear frames to scan for the '
                        'outcome pair')
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser('simulate', parents=[common],
                       help='Monte Carlo Franson run and fringe scan')
    p.add_argument('config')
    p.add_argument('--csv', default=None, help='fringe CSV path')
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--n-pairs', dest='n_pairs', type=int, default=None)
    p.add_argument('--table-out', dest='table_out', default=None,
                   help='write the kept-subensemble table file')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('bounds', parents=[common],
                       help='local, quantum and postselected bounds')
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument('--chsh', action='store_true')
    group.add_argument('--chained', type=int, metavar='N')
    p.add_argument('--postselected', default=None,
                   choices=['setting-dependent', 'fixed-path'])
    p.add_argument('--budget', type=int, default=5,
                   help='refinement restarts of the postselected search')
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser('lhv-fit', parents=[common],
                       help='common-cause model or nonlocality certificate')
    p.add_argument('--table', required=True)
    p.add_argument('--method', default='auto', choices=ALLOWED_METHODS)
    p.add_argument('--receiver', default=None, choices=['A', 'B'],
                   help='side that sees the remote setting (default: the '
                        'side with the latest outcome in --config, else A)')
    p.add_argument('--config', default=None,
                   help='experiment config whose schedule picks the receiver')
    p.add_argument('--model-out', dest='model_out', default=None)
    p.set_defaults(func=cmd_lhv_fit)
    return parser


def main(argv=None):
    """Run the command line; return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code else EXIT_OK
    set_log_level('DEBUG' if args.debug else 'INFO' if args.verbose
                  else 'WARNING')
    try:
        return args.func(args)
    except ConfigError as err:
        logger.error(str(err))
        return EXIT_CONFIG
    except CapExceededError as err:
        logger.error(str(err))
        return EXIT_CAP
    except (ValueError, OSError) as err:
        logger.error('error: %s' % err)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
