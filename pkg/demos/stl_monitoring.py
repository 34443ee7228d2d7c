"""Monitor signal temporal logic formulas on a trajectory.

Builds a small synthetic trajectory, then shows:
  * exact robustness of a reach-and-avoid specification,
  * how the smooth (differentiable) semantics converge to the exact value,
  * a per-subformula breakdown like the `stldmp eval` subcommand prints.
"""

import sys

import numpy as np

from stldmp.stl import (
    horizon,
    parse,
    pretty,
    robustness,
    smooth_robustness,
    smoothing_error_bound,
)
from stldmp.trace import SignalTrace

from common import banner, min_jerk


def main() -> int:
    trace = min_jerk([0, 0, 0], [0.8, 0.4, 0.0], n=100, bump=(2, 0.15))

    spec = parse(
        "F[0,99](norm2(y - [0.8,0.4,0.0]) < 0.05) & G[0,99](norm2(y - [0.4,0.2,0.0]) > 0.1)"
    )
    banner(f"specification: {pretty(spec)}")
    print(f"horizon: {horizon(spec)} samples; trace: {len(trace)} samples")

    rho = robustness(spec, trace, 0)
    print(f"exact robustness: {rho:+.5f}  ({'satisfied' if rho >= 0 else 'violated'})")

    banner("smooth semantics at decreasing temperature")
    for tau in (0.5, 0.1, 0.02, 0.004):
        smooth = smooth_robustness(spec, trace, 0, tau)
        bound = smoothing_error_bound(spec, tau)
        print(f"  tau={tau:<6g} smooth={smooth:+.5f}  |error|={abs(smooth - rho):.2e}"
              f"  bound={bound:.2e}")
        if abs(smooth - rho) > bound:
            print("unexpected: smoothing error exceeded its bound", file=sys.stderr)
            return 1

    banner("per-subformula robustness")

    def subformulas(f):
        if hasattr(f, "children"):
            return list(f.children)
        if hasattr(f, "lhs"):
            return [f.lhs, f.rhs]
        if hasattr(f, "child"):
            return [f.child]
        return []

    def walk(f, depth=0):
        print(f"  {'  ' * depth}{robustness(f, trace, 0):+.5f}  {pretty(f)}")
        for child in subformulas(f):
            walk(child, depth + 1)

    walk(spec)
    return 0 if rho >= 0 else 1


if __name__ == "__main__":
    sys.exit(main())
