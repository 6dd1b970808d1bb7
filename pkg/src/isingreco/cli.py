"""``isingreco`` command line: solve | track | jets | vertex | bench."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__
from .bench import REPORT_SCHEMA_VERSION, run_experiment
from .config import CONFIG_SCHEMA_VERSION, TASKS, ConfigError, load_config
from .ising import PROBLEM_FORMAT_VERSION, ProblemError

EXIT_OK, EXIT_RUN_FAILED, EXIT_CONFIG = 0, 1, 2


def version_string() -> str:
    return (
        f"isingreco {__version__} (config schema {CONFIG_SCHEMA_VERSION}, "
        f"report schema {REPORT_SCHEMA_VERSION}, problem format {PROBLEM_FORMAT_VERSION})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isingreco", description="Ising/QUBO solvers and reconstruction toys.")
    parser.add_argument("--version", action="version", version=version_string())
    sub = parser.add_subparsers(dest="command", required=True)
    for task in TASKS:
        sp = sub.add_parser(task, help=f"run a '{task}' experiment from a TOML config")
        sp.add_argument("--config", required=True, help="experiment config (TOML)")
        sp.add_argument("--seed", type=int, action="append", help="override the seed list (repeatable)")
        sp.add_argument("--out", help="override the report path")
        sp.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.task != args.command:
            raise ConfigError(f"config task is {cfg.task!r} but the '{args.command}' command was used")
        if args.seed:
            cfg = replace(cfg, seeds=list(args.seed))
        if args.out:
            cfg = replace(cfg, output=args.out)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except (ConfigError, ProblemError) as exc:
        print(f"isingreco: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg, jobs=args.jobs)
    except OSError as exc:
        print(f"isingreco: cannot write report: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    summary = report["summary"]
    for f in summary["failures"]:
        print(f"isingreco: run failed: solver={f['solver_id']} seed={f['seed']}: {f['error']}", file=sys.stderr)
    print(f"wrote {summary['n_runs']} records to {cfg.output}")
    return EXIT_OK if summary["n_failed"] == 0 else EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
