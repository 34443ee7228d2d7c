"""Slow down a wrist rotation with an orientation-speed constraint.

A pouring motion combines a small translation with a wrist tilt.  The
demonstration tilts faster than allowed; the optimizer reshapes the
orientation profile (jointly with the position DMP) until the rotation
speed stays under the limit, without changing where the tilt starts or
ends.
"""

import sys

import numpy as np

from stldmp.dmp import learn_dmp
from stldmp.optimize import OptimizationProblem, OptimizerConfig, optimize
from stldmp.quat import (
    QuatDmpModel,
    learn_forcing_quat,
    quat_conjugate,
    quat_exp,
    quat_log,
    quat_multiply,
    rollout_quat,
)
from stldmp.stl import parse

from common import banner, min_jerk, out_dir


def tilt_quat(angle):
    axis = np.array([1.0, 0.0, 0.0])
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def main() -> int:
    dest = out_dir("orientation_pour")
    n, dt = 81, 0.02
    demo = min_jerk([0.4, 0.0, 0.3], [0.45, 0.0, 0.28], n=n, dt=dt)
    model = learn_dmp(demo)

    # wrist tilt of 0.6 rad following the same minimum-jerk profile
    q0, q1 = tilt_quat(0.0), tilt_quat(0.6)
    delta = quat_log(quat_multiply(q1, quat_conjugate(q0)))
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    quats = np.stack([quat_multiply(quat_exp(si * delta), q0) for si in s])
    qdemo = demo.with_channels({f"q.{c}": quats[:, j] for j, c in enumerate("wxyz")})
    F_q = learn_forcing_quat(qdemo, 25.0, 6.25, model.tau)
    quat_model = QuatDmpModel(25.0, 6.25, model.tau, dt, q0, q1, F_q)

    peak = float(rollout_quat(quat_model).channel("qspeed").max())
    bound = 0.8 * peak
    banner("pouring tilt")
    print(f"demonstrated peak rotation speed: {peak:.3f} rad/s")
    print(f"allowed ceiling:                  {bound:.3f} rad/s")

    problem = OptimizationProblem(
        model=model,
        constraint=parse(f"G[0,{n - 1}](qspeed < {bound})"),
        quat_model=quat_model,
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.01, temperature=0.01,
                               max_iters=150, anneal_every=0),
    )
    result = optimize(problem)
    new_peak = float(result.trace.channel("qspeed").max())
    print(f"optimized peak rotation speed:    {new_peak:.3f} rad/s "
          f"({result.status})")
    result.trace.to_csv(dest / "pour.csv")
    print(f"\ntrace in {dest}")
    return 0 if result.status == "satisfied" and new_peak < bound else 1


if __name__ == "__main__":
    sys.exit(main())
