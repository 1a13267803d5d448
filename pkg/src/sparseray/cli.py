"""Command-line entry point: ``sparseray run <config.toml>``.

Exit codes: 0 success, 2 configuration error, 3 numerical hard failure.
Log verbosity comes from the ``SPARSERAY_LOG`` environment variable
(debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .experiments import ConfigError, NumericalFailure, parse_config, run_experiment
from .solvers import IllConditionedError

log = logging.getLogger("sparseray")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseray",
        description="Sparse spectrum recovery experiments and radar imaging runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment from a TOML config")
    run_p.add_argument("config", help="path to the experiment config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--jobs", type=int, default=None,
                       help="worker processes for trial-parallel experiments "
                            "(default: available parallelism)")
    run_p.add_argument("--out", default=None, help="override output_dir")
    run_p.add_argument("--format", default=None,
                       help="comma-separated subset of csv,json,pgm")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SPARSERAY_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command != "run":  # pragma: no cover - argparse enforces
        return EXIT_CONFIG
    try:
        raw = _load_toml(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: cannot parse config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(raw)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output_dir = args.out
        if args.format is not None:
            formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
            bad = [f for f in formats if f not in ("csv", "json", "pgm")]
            if bad:
                raise ConfigError(f"unknown entry {bad[0]!r} in field 'formats'")
            cfg.formats = formats
        jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
        log.info("running %s -> %s (seed %d, %d trials, %d jobs)",
                 cfg.experiment, cfg.output_dir, cfg.seed, cfg.trials, jobs)
        run_experiment(cfg, jobs=max(jobs, 1))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, IllConditionedError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
