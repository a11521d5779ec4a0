# -*- coding: utf-8 -*-
"""Command-line front end: ``dipsharp simulate|sweep|sectors|theory|compare``.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 exact
engine overflow (rerun with ``--engine pf:N`` or ``fallback = true``),
4 quadrature did not converge.
"""

__all__ = ["main", "make_parser", "EXIT_OK", "EXIT_FAILURE", "EXIT_CONFIG", "EXIT_OVERFLOW",
           "EXIT_QUADRATURE"]

import argparse
import logging
import sys

from . import __version__
from . import log
from .config import ConfigError, RunConfig, with_overrides
from .dynassign import dyn
from .exact import EngineOverflow
from .harness import (AxisMismatch, compare_run, load_and_override, run, sectors_table, sweep,
                      theory_tables)
from .theory import QuadratureNotConverged

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_OVERFLOW = 3
EXIT_QUADRATURE = 4

def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer, got {}".format(text))
    return value

def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer, got {}".format(text))
    return value

def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (INI)")
    common.add_argument("--seed", type=_u64, metavar="U64", help="override [run] master_seed")
    common.add_argument("--out", metavar="DIR", help="override [run] out")
    common.add_argument("--engine", metavar="exact|pf:N", help="override [run] engine")
    common.add_argument("--jobs", type=_positive, metavar="K", help="override [run] jobs")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress and info, -vv for debug")
    common.add_argument("--no-color", action="store_true", help="plain log output")

    parser = argparse.ArgumentParser(prog="dipsharp",
                                     description="Monitored dipole-conserving circuits: simulation and theory.")
    parser.add_argument("--version", action="version", version="%(prog)s {}".format(__version__))
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the trajectories of one configuration")
    sub.add_parser("sweep", parents=[common], help="run every point of the [sweep] axes")
    sub.add_parser("sectors", parents=[common], help="window sector table and sector connectivity")
    sub.add_parser("theory", parents=[common], help="field-theory prediction tables")
    sub.add_parser("compare", parents=[common], help="compare a run's correlators with the theory")
    return parser

def _config(args):
    overrides = dict(seed=args.seed, out=args.out, engine=args.engine, jobs=args.jobs)
    if args.config:
        return load_and_override(args.config, **overrides)
    if args.command in ("simulate", "sweep", "compare"):
        raise ConfigError("'{}' needs --config".format(args.command))
    return with_overrides(RunConfig(), **overrides)

def _dispatch(args):
    config = _config(args)
    if args.command == "simulate":
        manifest = run(config)
        print("{} trajectories written to {}".format(manifest.n_trajectories, config.run.out))
    elif args.command == "sweep":
        frame = sweep(config)
        print(frame.to_string(index=False))
    elif args.command == "sectors":
        windows, connectivity = sectors_table(config)
        print(windows.to_string(index=False))
        if connectivity is not None:
            print()
            print(connectivity.to_string(index=False))
    elif args.command == "theory":
        doc = theory_tables(config)
        print("K = {:.6g}, gamma_c = {:.6g}, {}".format(doc["luttinger_K"], doc["gamma_critical"],
                                                       doc["dipole_phase"]))
    elif args.command == "compare":
        rows = compare_run(config)
        for r in rows:
            print("{:7s} sim {} {:+.3f} +- {:.3f}  theory {} {:+.3f}  {}".format(
                r.observable, r.sim_form, r.sim_exponent, r.sim_error, r.theory_form,
                r.theory_exponent, "pass" if r.passed else "FAIL"))
        if not all(r.passed for r in rows):
            return EXIT_FAILURE
    return EXIT_OK

def main(argv=None):
    args = make_parser().parse_args(argv)
    log.setup(args.verbose, use_color=False if args.no_color else None)
    try:
        with dyn.let(progress=args.verbose >= 1 and sys.stderr.isatty()):
            return _dispatch(args)
    except ConfigError as err:
        logger.error("%s", err)
        return EXIT_CONFIG
    except EngineOverflow as err:
        logger.error("%s; use --engine pf:N, or set fallback = true in [run]", err)
        return EXIT_OVERFLOW
    except QuadratureNotConverged as err:
        logger.error("%s", err)
        return EXIT_QUADRATURE
    except (AxisMismatch, OSError) as err:
        logger.error("%s", err)
        return EXIT_FAILURE
