"""Command-line front end: run experiments, write tables, gate on passes."""

import os

# Pin BLAS threading before numpy loads anywhere downstream; reproducibility
# beats raw speed for a verification harness. Respect explicit user settings.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import argparse
import sys

from ..errors import ConfigError
from .config import EXPERIMENTS, build_config
from .experiments import run, run_all, write_report


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mlda",
        description=(
            "Run the multilabel discriminant analysis verification "
            "experiments and write <experiment>.csv plus "
            "<experiment>.summary.json into the output directory."
        ),
    )
    parser.add_argument(
        "experiment",
        choices=EXPERIMENTS + ("all",),
        help="which experiment to run ('all' runs every one at its defaults)",
    )
    parser.add_argument("--config", help="JSON config file overriding the defaults")
    parser.add_argument("--seed", type=int, help="base seed for all random streams")
    parser.add_argument("--out", help="output directory (default: results)")
    parser.add_argument(
        "--trials",
        type=int,
        help="override the experiment's trial/draw count (smoke runs)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        help="worker threads for independent trials (default: MLDA_THREADS or 1)",
    )
    return parser


def _print_report(report, csv_path):
    print(f"== {report.experiment} ({report.wall_time_s:.1f}s) -> {csv_path}")
    for row in report.rows:
        cells = ", ".join(f"{k}={v}" for k, v in row.items())
        print(f"   {cells}")
    for name, ok in report.passes.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if not report.all_passed:
        for line in report.summary.get("failures", []):
            print(f"   offending: {line}")


def main(argv=None):
    args = _build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        env = os.environ.get("MLDA_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError:
                print(f"mlda: MLDA_THREADS={env!r} is not an integer", file=sys.stderr)
                return 2
    try:
        config = build_config(
            args.experiment,
            config_path=args.config,
            seed=args.seed,
            out_dir=args.out,
            trials=args.trials,
            threads=threads,
        )
        reports = run_all(config) if args.experiment == "all" else [run(config)]
    except ConfigError as exc:
        print(f"mlda: {exc}", file=sys.stderr)
        return 2

    all_ok = True
    for report in reports:
        csv_path, _ = write_report(report, config.out_dir)
        _print_report(report, csv_path)
        all_ok = all_ok and report.all_passed
    return 0 if all_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
