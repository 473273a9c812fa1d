"""``splice-lab`` command line: ``run`` and ``selftest``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..parallel import thread_count
from .config import ALL, EXPERIMENTS, ConfigError, ExperimentConfig, load_config, validate

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splice-lab",
                                     description="Numerical checks for cylinder splicing.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run experiments from a config file")
    run.add_argument("--config", type=Path, help="key = value config file (defaults if omitted)")
    run.add_argument("--experiment", choices=EXPERIMENTS + (ALL,),
                     help="override the experiment named in the config")
    run.add_argument("--plots", action="store_true", help="write SVG decay plots")
    run.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    run.add_argument("--threads", type=int, help="worker threads (else SPLICE_LAB_THREADS)")
    sub.add_parser("selftest", help="run the fast built-in invariant checks")
    return parser


def _run(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else validate(ExperimentConfig())
        if args.experiment:
            cfg = replace(cfg, experiment=args.experiment)
        threads = thread_count(args.threads)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .experiments import run_experiment

    code, summary = run_experiment(cfg, args.out, args.plots, threads)
    for name, exp in summary["experiments"].items():
        for c in exp["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            print(f"{status} {name}/{c['name']}: measured {c['measured']:.6g} "
                  f"(threshold {c['threshold']:.6g}) {c['detail']}".rstrip())
        print(f"  {name}: {exp['runtime_s']:.2f} s")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    from .selftest import run_selftest

    return EXIT_PASS if run_selftest() else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
