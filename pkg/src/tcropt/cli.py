"""Command-line front end for the experiment harness.

Exit codes: 0 on success, 2 for configuration problems, 3 when a solver
fails or returns an infeasible allocation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ConfigError
from .harness import (ALGORITHMS, SWEEPS, ExperimentConfig,
                      load_experiment_config, run_experiment)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcropt",
        description="Run trust-cost ratio experiments over seeded "
                    "edge-computing scenarios.")
    parser.add_argument("--config", metavar="PATH",
                        help="YAML file with scenario and experiment "
                             "settings")
    parser.add_argument("--seed", metavar="N", type=int, nargs="+",
                        help="seeds to run (one scenario per seed)")
    parser.add_argument("--algo", metavar="NAME", nargs="+",
                        help="algorithms to run, or 'all' "
                             f"(choices: {', '.join(ALGORITHMS)})")
    parser.add_argument("--sweep", metavar="NAME",
                        choices=sorted(SWEEPS),
                        help="parameter sweep to run "
                             f"(choices: {', '.join(sorted(SWEEPS))})")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory for CSV and chart files")
    parser.add_argument("--workers", metavar="K", type=int,
                        help="number of worker processes")
    parser.add_argument("--trace", action="store_true", default=None,
                        help="also write one per-iteration trace file "
                             "per run")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file (if any) with command-line overrides."""
    if args.config:
        config = load_experiment_config(args.config)
    else:
        config = ExperimentConfig()
    if args.seed:
        config = replace(config, seeds=tuple(args.seed))
    if args.algo:
        names = tuple(args.algo)
        if names == ("all",):
            names = ALGORITHMS
        config = replace(config, algorithms=names)
    if args.sweep:
        config = replace(config, sweep=args.sweep,
                         sweep_values=SWEEPS[args.sweep])
    if args.out:
        config = replace(config, out_dir=args.out)
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    if args.trace is not None:
        config = replace(config, trace=args.trace)
    problems = config.validate()
    if problems:
        raise ConfigError("invalid experiment: " + "; ".join(problems))
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = run_experiment(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(rows)} result rows to {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
