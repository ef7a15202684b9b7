"""Command-line entry points: run a scenario, run the eigenvector demo, or
validate a scenario config without running it."""

from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, ScenarioConfig, run_eigen_demo, run_scenario


def _cmd_run(args: argparse.Namespace) -> int:
    config = ScenarioConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    result = run_scenario(config)
    print(f"metrics: {result.metrics_path}")
    print(f"envelopes: {result.envelope_path}")
    for path in result.snapshot_paths:
        print(f"snapshot: {path}")
    print(f"ticks run: {result.ticks_run}  final map discrepancy: {result.final_phi_map:.3e}")
    return 0


def _cmd_eigen(args: argparse.Namespace) -> int:
    result = run_eigen_demo(
        n_points=args.points,
        seed=args.seed,
        epsilon=args.epsilon,
        out_dir=args.out,
    )
    print(
        f"final angle to oracle: {result.final_angle:.3e} rad  "
        f"disagreement: {result.final_phi:.3e}"
    )
    if result.trace_path is not None:
        print(f"trace: {result.trace_path}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = ScenarioConfig.from_file(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}")
        return 1
    errors = config.validate()
    if errors:
        for err in errors:
            print(f"error: {err}")
        return 1
    print("ok")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="georover",
        description="multi-robot mapping and exploration simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out", default=None)
    run_p.set_defaults(func=_cmd_run)

    eigen_p = sub.add_parser("eigen-demo", help="two-agent circle eigenvector demo")
    eigen_p.add_argument("--points", type=int, default=200)
    eigen_p.add_argument("--seed", type=int, default=0)
    eigen_p.add_argument("--epsilon", type=float, default=0.45)
    eigen_p.add_argument("--out", default=None)
    eigen_p.set_defaults(func=_cmd_eigen)

    val_p = sub.add_parser("validate", help="check a scenario config")
    val_p.add_argument("--config", required=True)
    val_p.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
