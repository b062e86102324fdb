"""Command-line interface.

Subcommands:

* ``run`` - execute a seeded multi-run experiment from a JSON config;
* ``aggregate`` - build tables, figure series, and rendered figures from
  a finished experiment directory;
* ``calibrate`` - evaluate candidate feature sets on a profile and write a
  new profile carrying the optimal feature set index;
* ``profile`` - export a built-in profile to JSON.

Exit codes: 0 success, 1 configuration error, 2 I/O error,
3 degenerate-data or metric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (AggregationError, ConfigurationError,
                     ContractViolationError, DegenerateDataError, MetricError)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_DEGENERATE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairbandit",
                     description="Fairness-aware contextual-bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a seeded experiment")
    p_run.add_argument("--config", required=True, help="experiment config JSON")
    p_run.add_argument("--mode", choices=("per_feature_set", "nested"),
                       help="override the config mode")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument("--parallelism", type=int,
                       help="worker processes (results are identical for any value)")

    p_agg = sub.add_parser("aggregate", help="aggregate run logs")
    p_agg.add_argument("--logs", required=True, help="experiment output directory")
    p_agg.add_argument("--out", help="aggregation output directory (default: --logs)")
    p_agg.add_argument("--no-render", action="store_true",
                       help="skip PNG rendering of the figure series")

    p_cal = sub.add_parser("calibrate", help="establish the optimal feature set")
    p_cal.add_argument("--profile", required=True,
                       help="profile name or JSON path to calibrate")
    p_cal.add_argument("--out", required=True, help="output profile JSON path")
    p_cal.add_argument("--runs", type=int, default=20, help="runs per feature set")
    p_cal.add_argument("--t", type=int, default=50_000, help="steps per run")
    p_cal.add_argument("--seed", type=int, default=0, help="master seed")
    p_cal.add_argument("--alpha", type=float, default=0.3)
    p_cal.add_argument("--parallelism", type=int, default=1)

    p_prof = sub.add_parser("profile", help="export a built-in profile")
    p_prof.add_argument("--name", required=True, help="neutral or calibrated")
    p_prof.add_argument("--out", required=True, help="output JSON path")
    return parser


def _cmd_run(args) -> int:
    from .harness import ExperimentConfig, run_nested, run_per_feature_set

    config = ExperimentConfig.from_json_file(args.config)
    overrides = {}
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.parallelism is not None:
        overrides["parallelism"] = args.parallelism
    if overrides:
        doc = config.to_dict()
        doc.update({{"mode": "mode", "master_seed": "master_seed",
                     "output_dir": "output_dir", "parallelism": "parallelism"}[k]: v
                    for k, v in overrides.items()})
        config = ExperimentConfig.from_dict(doc)
    if config.mode == "nested":
        manifest = run_nested(config)
    elif config.mode == "per_feature_set":
        manifest = run_per_feature_set(config)
    else:
        raise ConfigurationError(
            "use the 'calibrate' subcommand for calibrate-mode configs")
    print(f"wrote {len(manifest['runs'])} run logs under {config.output_dir}")
    if manifest.get("warning"):
        print(f"warning: {manifest['warning']}", file=sys.stderr)
    return EXIT_OK


def _cmd_aggregate(args) -> int:
    from .harness import aggregate

    outputs = aggregate(args.logs, args.out, render=not args.no_render)
    print(json.dumps(outputs, indent=1))
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    from .harness import ExperimentConfig, calibrate

    config = ExperimentConfig(
        mode="calibrate", profile_path=args.profile, runs=args.runs,
        t_steps=args.t, master_seed=args.seed, alpha=args.alpha,
        parallelism=args.parallelism)
    profile = calibrate(config, args.out)
    info = profile.metadata.get("calibration", {})
    print(f"optimal feature set index: {profile.optimal_feature_set_index}")
    if info.get("warning"):
        print(f"warning: {info['warning']}", file=sys.stderr)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_profile(args) -> int:
    from .environment import save_profile
    from .profiles import PROFILE_BUILDERS

    if args.name not in PROFILE_BUILDERS:
        raise ConfigurationError(
            f"unknown profile {args.name!r}; choose from "
            f"{', '.join(sorted(PROFILE_BUILDERS))}")
    save_profile(PROFILE_BUILDERS[args.name](), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "aggregate": _cmd_aggregate,
             "calibrate": _cmd_calibrate, "profile": _cmd_profile}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigurationError, ContractViolationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateDataError, MetricError, AggregationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
