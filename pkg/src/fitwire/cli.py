"""Command line entry point: ``fitwire run | study | info``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import _kernels
from .config import DEFAULTS, PRESETS, ConfigError, from_dict, load_config
from .linsolve import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment file")
    common.add_argument("--preset", choices=PRESETS,
                        help="preset used when the config names none")
    common.add_argument("--out", metavar="DIR", default=None, help="output directory")
    common.add_argument("--levels", type=int, metavar="N", default=None,
                        help="number of study levels (default: from config)")
    common.add_argument("--threads", type=int, metavar="N", default=1,
                        help="worker threads for concurrent study levels")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="fitwire", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="solve a single configuration")
    sub.add_parser("study", parents=[common], help="run a convergence study")
    sub.add_parser("info", parents=[common], help="print the resolved configuration")
    return p


def _config(args):
    if args.config:
        return load_config(args.config, args.preset)
    return from_dict({}, args.preset)


def _check_threads(n: int):
    # the hot kernels are serial; threads only parallelize study levels
    if n < 1:
        raise ConfigError("--threads must be at least 1")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from . import studies  # deferred: keeps `info` fast

    try:
        cfg = _config(args)
        _check_threads(args.threads)
        out = args.out or cfg.output["dir"]
        if args.command == "info":
            print(f"# kernel backend: {_kernels.BACKEND}; threads available: {os.cpu_count()}")
            print(cfg.dump(), end="")
            return EXIT_OK
        if args.command == "run":
            summary = studies.run_preset(cfg, out)
            for k in sorted(summary):
                print(f"{k:>14s} = {summary[k]:.6g}")
            return EXIT_OK
        levels = studies.resolve_levels(cfg, args.levels)
        res = studies.run_convergence_study(cfg, levels, out, args.threads)
        header, rows = res.table()
        print("  ".join(header))
        for r in rows:
            print("  ".join(f"{v:.4e}" if isinstance(v, float) else str(v) for v in r))
        for m, v in sorted(res.orders.items()):
            if np.isscalar(v):
                print(f"order[{m}] = {v:.3f}")
        return EXIT_OK if res.complete else EXIT_SOLVER
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def presets_overview() -> dict:
    return {k: sorted(v) for k, v in DEFAULTS.items()}


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
