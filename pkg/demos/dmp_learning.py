"""Learn a dynamic movement primitive from demonstrations and reuse it.

Shows the full learning path: several noisy demonstrations are statistically
averaged (GMM/GMR over the phase), a forcing term is extracted and encoded in
a radial basis, and the resulting model reproduces the mean motion and
generalizes to new start/goal pairs.
"""

import sys

import numpy as np

from stldmp.demostats import build_demo_set, compute_stats
from stldmp.dmp import learn_dmp, rollout, rollout_arrays

from common import banner, min_jerk, out_dir


def main() -> int:
    rng = np.random.default_rng(0)
    dest = out_dir("dmp_learning")

    # three demonstrations of the same reach, with small random variation
    demos = []
    for _ in range(3):
        jitter = rng.normal(scale=0.01, size=3)
        demos.append(min_jerk([0, 0, 0], np.array([0.6, 0.3, 0.0]) + jitter,
                              n=80, bump=(2, 0.1 + rng.normal(scale=0.005))))

    banner("demonstration statistics")
    stats = compute_stats(build_demo_set(demos))
    print(f"mean trajectory: {stats.mean.shape[0]} samples")
    variances = np.stack([np.diag(c) for c in stats.cov])
    print(f"variance range: [{variances.min():.2e}, {variances.max():.2e}]")
    print("low-variance samples get high weights; they are preserved under")
    print("optimization, while high-variance ones are cheap to modify")

    mean_demo = demos[0].with_channels(
        {f"y.{ax}": stats.mean[:, j] for j, ax in enumerate("xyz")}
    )
    model = learn_dmp(mean_demo)
    y, _ = rollout_arrays(model, model.F_lrn)
    path_length = float(np.sum(np.linalg.norm(np.diff(stats.mean, axis=0), axis=1)))
    rmse = float(np.sqrt(np.mean(np.sum((y - stats.mean) ** 2, axis=1))))
    banner("reproduction")
    print(f"path length {path_length:.3f} m, reproduction RMSE {rmse:.2e} m "
          f"({100 * rmse / path_length:.3f}% of path length)")
    rollout(model).to_csv(dest / "reproduction.csv")

    banner("generalization: same skill, new endpoints")
    for y_init, y_goal in [([0.1, 0.0, 0.0], [0.7, 0.1, 0.1]),
                           ([0.0, 0.2, 0.0], [0.4, 0.5, 0.0])]:
        y_new, _ = rollout_arrays(model, model.F_lrn,
                                  y_init=np.array(y_init), y_goal=np.array(y_goal))
        end_err = float(np.linalg.norm(y_new[-1] - y_goal))
        print(f"  start {y_init} -> goal {y_goal}: endpoint error {end_err:.2e} m")
        if end_err > 0.01:
            print("unexpected: endpoint error above 1 cm", file=sys.stderr)
            return 1

    print(f"\nartifacts in {dest}")
    return 0 if rmse <= 0.01 * path_length else 1


if __name__ == "__main__":
    sys.exit(main())
