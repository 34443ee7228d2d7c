"""Optimize learned motions until they satisfy temporal-logic constraints.

Four classic constraint patterns, each starting from a demonstration that
deliberately violates the specification:

  via-point        the motion must pass within 1 cm of an inspection point
  obstacle         the motion must keep a keep-out sphere at distance
  space limit      a coordinate must stay inside a band late in the motion
  velocity limit   vertical speed must stay under a ceiling mid-motion

The optimizer perturbs the DMP forcing term (not the trajectory directly),
so the result is still a generalizable movement primitive.
"""

import sys

import numpy as np

from stldmp.dmp import learn_dmp, rollout_arrays
from stldmp.optimize import OptimizationProblem, OptimizerConfig, optimize
from stldmp.stl import parse, robustness
from stldmp.trace import SignalTrace

from common import banner, out_dir

N, DT = 151, 0.02


def profile():
    t = np.linspace(0.0, 1.0, N)
    return t, 10 * t**3 - 15 * t**4 + 6 * t**5


def scenarios():
    t, s = profile()

    pos = np.outer(s, [1.0, 0.0, 0.0])
    pos[:, 1] += 0.15 * np.sin(np.pi * t)
    reach = SignalTrace.from_positions(DT, pos)

    pos3 = np.outer(s, [1.0, 1.9, 0.0])
    pos3[:, 1] += 0.5 * np.exp(-(((t - 0.78) / 0.1) ** 2))
    pos3[:, 2] += 0.5 * np.sin(np.pi * t)
    overshoot = SignalTrace.from_positions(DT, pos3)

    pos4 = np.outer(s, [0.5, 0.3, 0.0])
    pos4[:, 2] = 0.4 * s
    lift = SignalTrace.from_positions(DT, pos4)

    yield "via_point", OptimizationProblem(
        model=learn_dmp(reach),
        constraint=parse("F[0,150](norm2(y - [0.4,0.25,0.1]) < 0.01)"),
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.007, temperature=0.001,
                               max_iters=400, anneal_every=0),
    )
    yield "obstacle", OptimizationProblem(
        model=learn_dmp(reach),
        constraint=parse("G[0,150](norm2(y - [0.5,0.1,0.0]) > 0.15)"),
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.02, temperature=0.005,
                               max_iters=400, anneal_every=0),
    )
    yield "space_limit", OptimizationProblem(
        model=learn_dmp(overshoot),
        constraint=parse("G[90,150]((y.y > -4.0) & (y.y < 2.0))"),
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.02, temperature=0.005,
                               max_iters=400, anneal_every=0),
    )
    yield "velocity_limit", OptimizationProblem(
        model=learn_dmp(lift),
        constraint=parse("G[30,120](vel.z < 0.005)"),
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.002, temperature=0.002,
                               max_iters=400, anneal_every=0),
    )


def main() -> int:
    dest = out_dir("constrained_motion")
    ok = True
    for name, problem in scenarios():
        y_lrn, _ = rollout_arrays(problem.model, problem.model.F_lrn)
        before = robustness(problem.constraint,
                            SignalTrace.from_positions(DT, y_lrn), 0)
        result = optimize(problem)
        dist = float(np.linalg.norm(result.F_opt - problem.model.F_lrn))
        banner(name.replace("_", " "))
        print(f"  robustness before: {before:+.4f}   after: "
              f"{result.robustness_exact:+.4f}   ({result.status}, "
              f"{result.iterations} iterations)")
        print(f"  forcing-term distance ||F_opt - F_lrn||: {dist:.2f}")
        result.trace.to_csv(dest / f"{name}.csv")
        ok &= result.status == "satisfied" and before < 0

    print(f"\ntraces in {dest}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
