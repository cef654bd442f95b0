import argparse
import json
import logging
import os
import sys

import pandas as pd

from constants import (RUN_ID, RUN_LOGS_DIR_PATH, LOG_FILE_PATH, OUTPUT_DUMP, DEFAULT_SEED, DEFAULT_P_MAX,
                       DEFAULT_MAX_RESAMPLES, IDENTITY_TOL, DELTA_TOL, PAIR_TOL, SIMPLEX_TOL, EXIT_OK, EXIT_USAGE)
from etc_functions import parse_multi_index
from exceptions import EllipticError, UsageError
from harness import (SamplerConfig, SuiteCase, IDENTITY, INVERSION, PAIR, SIMPLEX, run_suite, run_selftest,
                     exit_code, trials_frame, catalog_frames)
from inversions import ALL_KINDS
from summations import IDENTITIES, SIMPLEX_PAIRS, BOX, get_identity
from bailey_pairs import DERIVATIONS

logger = logging.getLogger(__name__)


def configure_logging(verbose=False):
    os.makedirs(RUN_LOGS_DIR_PATH, exist_ok=True)
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        filename=LOG_FILE_PATH,
        filemode='w+',
        encoding='utf-8'
    )
    if verbose:
        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter('%(levelname)s - %(name)s - %(message)s'))
        logging.getLogger().addHandler(handler)


def _common_arguments():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', '-s', type=int, default=DEFAULT_SEED, help='Root seed of the trial streams')
    common.add_argument('--p-max', type=float, default=DEFAULT_P_MAX, help='Nome moduli are drawn from (0, p-max]')
    common.add_argument('--max-resamples', type=int, default=DEFAULT_MAX_RESAMPLES,
                        help='Degenerate draws allowed per trial')
    common.add_argument('--json', '-j', type=str, help='Write the JSON report to this file')
    common.add_argument('--table', action='store_true', help='Print one row per trial')
    common.add_argument('--timing', action='store_true', help='Fill wall_time_ms in the report')
    common.add_argument('--verbose', '-v', action='store_true', help='Echo INFO log records to stderr')
    return common


def _trial_arguments(parser, default_tol):
    parser.add_argument('--r', '-r', type=int, help='Dimension (defaults to the length of --n)')
    parser.add_argument('--n', '-n', type=parse_multi_index, help='Box corner, comma separated')
    parser.add_argument('--trials', '-t', type=int, default=10, help='Trials per case')
    parser.add_argument('--tol', type=float, default=default_tol, help='Pass threshold on the relative error')


def configure_argument_parser():
    common = _common_arguments()
    parser = argparse.ArgumentParser(description='Numerical verification of elliptic hypergeometric '
                                                 'summations and matrix inversions')
    commands = parser.add_subparsers(dest='command', required=True)

    commands.add_parser('list', help='Print the identity, inversion and Bailey pair catalogs')

    verify = commands.add_parser('verify', parents=[common], help='Random trials of one catalog identity')
    verify.add_argument('--identity', '-i', required=True, choices=list(IDENTITIES), metavar='ID')
    _trial_arguments(verify, IDENTITY_TOL)
    verify.add_argument('--N', type=int, help='Simplex cap')
    verify.add_argument('--p-zero', action='store_true', help='Pin p = 0 (trigonometric case)')

    invert = commands.add_parser('invert', parents=[common], help='Delta residual trials of an inversion kind')
    invert.add_argument('--kind', '-k', required=True, choices=list(ALL_KINDS))
    invert.add_argument('--m', '-m', type=int, default=1, help='Step of the geometric kinds')
    _trial_arguments(invert, DELTA_TOL)
    invert.add_argument('--l', '-l', type=parse_multi_index, help='Lower corner (defaults to 0)')
    invert.add_argument('--p-zero', action='store_true', help='Pin p = 0 (trigonometric case)')

    pair = commands.add_parser('pair', parents=[common], help='Bailey pair residual trials')
    pair.add_argument('--derivation', '-d', required=True, choices=list(DERIVATIONS))
    _trial_arguments(pair, PAIR_TOL)
    pair.add_argument('--flip-root', action='store_true', help='Use the other square root of q')

    simplex = commands.add_parser('simplex', parents=[common], help='Simplex versus box specialization trials')
    simplex.add_argument('--pair', '-p', required=True, choices=list(SIMPLEX_PAIRS))
    _trial_arguments(simplex, SIMPLEX_TOL)
    simplex.add_argument('--N', type=int, help='Simplex cap (defaults to |n|)')
    simplex.add_argument('--flip-root', action='store_true', help='Use the other square root of q')

    selftest = commands.add_parser('selftest', parents=[common], help='Run the full acceptance grid')
    selftest.add_argument('--quick', action='store_true', help='Smaller grids and fewer trials')
    return parser


def save_results_to_file(results, filename):
    """Save a verification report to a JSON file"""
    try:
        with open(filename, 'w', encoding='utf-8') as f:
            json.dump(results, f, indent=2, ensure_ascii=False)
        logger.info(f"Successfully saved results to {filename}")
        return True
    except Exception as e:
        logger.error(f"Error saving results to file: {str(e)}")
        return False


def _dimension(args):
    if args.n is None:
        raise UsageError(f"{args.command} needs --n")
    r = len(args.n) if args.r is None else args.r
    if r != len(args.n):
        raise UsageError(f"--r {r} does not match --n {','.join(map(str, args.n))}")
    return r


def _build_cases(args):
    if args.command == 'verify':
        spec = get_identity(args.identity)
        if spec.domain == BOX:
            r = _dimension(args)
            return [SuiteCase(IDENTITY, args.identity, r=r, n=args.n, trials=args.trials, tol=args.tol)]
        if args.N is None or args.r is None:
            raise UsageError(f"{args.identity} sums over a simplex and needs --r and --N")
        return [SuiteCase(IDENTITY, args.identity, r=args.r, N=args.N, trials=args.trials, tol=args.tol)]
    if args.command == 'invert':
        r = _dimension(args)
        l = args.l if args.l is not None else (0,) * r
        if len(l) != r or any(li > ni for li, ni in zip(l, args.n)):
            raise UsageError("--l must have the length of --n and satisfy l <= n")
        return [SuiteCase(INVERSION, args.kind, r=r, n=args.n, l=l, m=args.m, trials=args.trials, tol=args.tol)]
    if args.command == 'pair':
        r = _dimension(args)
        return [SuiteCase(PAIR, args.derivation, r=r, n=args.n, trials=args.trials, tol=args.tol,
                          flip_root=args.flip_root)]
    if args.command == 'simplex':
        r = _dimension(args)
        return [SuiteCase(SIMPLEX, args.pair, r=r, n=args.n, N=args.N, trials=args.trials, tol=args.tol,
                          flip_root=args.flip_root)]
    raise UsageError(f"Unknown command: {args.command}")


def print_catalog():
    identities, kinds, pairs = catalog_frames()
    with pd.option_context('display.max_colwidth', 80, 'display.width', 200):
        print(f"Identities ({len(identities)})")
        print(identities.to_string(index=False))
        print(f"\nInversion kinds ({len(kinds)})")
        print(kinds.to_string(index=False))
        print(f"\nBailey pairs ({len(pairs)})")
        print(pairs.to_string(index=False))


def print_summary(report, table=False):
    summary = report['summary']
    worst = summary['max_rel_error']
    print(f"{summary['pass_count']} pass, {summary['fail_count']} fail, {summary['degenerate_count']} degenerate "
          f"over {summary['trial_count']} trials in {summary['case_count']} cases; max rel_error {worst}")
    if table:
        with pd.option_context('display.max_rows', None, 'display.width', 200):
            print(trials_frame(report).to_string(index=False))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = configure_argument_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    configure_logging(getattr(args, 'verbose', False))
    logger.info(f"Starting {args.command} with arguments {argv}")

    if args.command == 'list':
        print_catalog()
        return EXIT_OK

    try:
        cfg = SamplerConfig(seed=args.seed, p_max=args.p_max, max_resamples=args.max_resamples,
                            p_zero=getattr(args, 'p_zero', False))
        if args.command == 'selftest':
            report, code = run_selftest(cfg, quick=args.quick, command=argv, timing=args.timing)
        else:
            report = run_suite(_build_cases(args), cfg, command=argv, timing=args.timing)
            code = exit_code(report)
    except EllipticError as e:
        logger.error(f"Usage error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    save_results_to_file(report, OUTPUT_DUMP)
    if args.json and not save_results_to_file(report, args.json):
        print(f"error: could not write {args.json}", file=sys.stderr)
        return EXIT_USAGE
    print_summary(report, args.table)
    logger.info(f"Finished {args.command} with exit code {code}")
    return code


if __name__ == '__main__':
    try:
        print(f"==================RUN_ID: {RUN_ID}============================", file=sys.stderr)
        exit_status = main()
        print(f"==================RUN_ID: {RUN_ID}============================", file=sys.stderr)
        sys.exit(exit_status)
    except Exception as e:
        logger.error(f"Error in main function: {e}")
        sys.exit(1)
