#!/usr/bin/env python3
"""Derivative-identity study.

Runs the coupled flow from configs/derivative_check.cfg, then compares the
centered finite difference of the counting functional alpha against gamma at a
sequence of sampling strides. The mismatch should drop roughly 4x per stride
halving until the propagator error floor.
"""

import pathlib
import sys

from gplab.functionals import derivative_mismatch
from gplab.harness import load_config, run, write_report

ROOT = pathlib.Path(__file__).resolve().parent.parent

def main() -> int:
    config = load_config(ROOT / "configs" / "derivative_check.cfg")
    report = run(config)
    out = write_report(report)
    print(f"report written to {out}")

    t = report.column("t")
    alphas = report.column("alpha")
    gammas = report.column("gamma")
    print(f"{'stride':>6} {'fd spacing':>12} {'max |fd - gamma|':>18}")
    previous = None
    for stride in (32, 16, 8, 4, 2, 1):
        rows = derivative_mismatch(t[::stride], alphas[::stride], gammas[::stride])
        worst = max(r.mismatch for r in rows)
        ratio = "" if previous is None else f"  ({previous / worst:.2f}x down)"
        print(f"{stride:>6} {stride * (t[1] - t[0]):>12.4g} {worst:>18.4e}{ratio}")
        previous = worst
    return 0

if __name__ == "__main__":
    sys.exit(main())
