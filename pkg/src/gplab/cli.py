"""Command-line entry point: `gplab run` and `gplab sweep`.

Exit codes: 0 on success, 2 on validation errors, 3 on numerical aborts.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .errors import NumericalAbort, ValidationError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gplab",
        description="Coupled many-body / mean-field runs with defect-counting diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", default=None, help="output directory (overrides the config)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted keys, repeatable)")

    run_p = sub.add_parser("run", help="single coupled run, CSV + JSON sidecar")
    common(run_p)

    sweep_p = sub.add_parser("sweep", help="run per axis value, plus a fitted summary")
    common(sweep_p)
    sweep_p.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values, e.g. 2,3,4,5")
    sweep_p.add_argument("--tstar", type=float, default=None,
                         help="observation time for the summary fits")
    return parser


def _load(args: argparse.Namespace) -> harness.ExperimentConfig:
    config = harness.load_config(args.config)
    for override in args.override:
        config = harness.apply_override(config, override)
    if args.out is not None:
        config = harness.apply_override(config, f"out={args.out}")
    return config


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load(args)
        if args.command == "run":
            report = harness.run(config)
            out = harness.write_report(report)
            print(f"wrote {out / 'report.csv'} ({len(report.rows)} rows)")
        else:
            values = [v for v in args.values.split(",") if v.strip()]
            report = harness.sweep(config, args.axis, values, tstar=args.tstar)
            out = harness.write_sweep(report)
            print(f"wrote {out / 'summary.csv'} ({len(report.entries)} entries)")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
