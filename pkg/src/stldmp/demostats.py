"""Statistics over multiple demonstrations.

A phase-conditioned Gaussian mixture is fit over (phi, y) samples from
all demonstrations; regression on phi yields the mean trajectory and a
per-sample 3x3 covariance.  The covariance diagonals feed the variance
weight matrix used to regularize forcing-term optimization:

    time weights   (per axis d):   w_i = exp(-sigma_i / mean_i(sigma))
    space weights  (per sample t): w_t^d = exp(-sigma_t^d / mean_d(sigma_t))
    combined:                      W[t, d] = space[t, d] * time[d][t]

The exponential form keeps weights finite and in (0, 1] even where the
shared start/goal makes the variance exactly zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.mixture import GaussianMixture

from .trace import SignalTrace

COV_FLOOR = 1e-8


class DemoStatsError(ValueError):
    pass


@dataclass
class DemoSet:
    """Demonstrations resampled to a common length and aligned endpoints."""

    demos: list[SignalTrace]

    def __post_init__(self):
        if not self.demos:
            raise DemoStatsError("need at least one demonstration")
        T = len(self.demos[0])
        if any(len(d) != T for d in self.demos):
            raise DemoStatsError("demos must share a common length; resample first")
        starts = np.stack([d.vector("y")[0] for d in self.demos])
        goals = np.stack([d.vector("y")[-1] for d in self.demos])
        if np.max(np.abs(starts - starts[0])) > 1e-6 or np.max(np.abs(goals - goals[0])) > 1e-6:
            raise DemoStatsError(
                "demonstrations must share start and goal positions (align first)"
            )

    @property
    def length(self) -> int:
        return len(self.demos[0])

    @property
    def dt(self) -> float:
        return self.demos[0].dt


@dataclass
class DemoStats:
    mean: np.ndarray            # (T, 3)
    cov: np.ndarray             # (T, 3, 3)
    W_time: np.ndarray          # (3, T) per-axis time weights
    W_space: np.ndarray         # (T, 3)
    W: np.ndarray               # (T, 3) combined

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "variances": np.stack([np.diag(c) for c in self.cov]).tolist(),
            "W_time": self.W_time.tolist(),
            "W_space": self.W_space.tolist(),
            "W": self.W.tolist(),
        }


def resample(demo: SignalTrace, n_samples: int) -> SignalTrace:
    """Linear resampling of position (and quaternion) channels to n_samples."""
    t_old = np.arange(len(demo)) * demo.dt
    duration = t_old[-1] if len(demo) > 1 else demo.dt
    t_new = np.linspace(0.0, duration, n_samples)
    dt_new = t_new[1] - t_new[0] if n_samples > 1 else demo.dt
    pos = np.stack(
        [np.interp(t_new, t_old, demo.channel(f"y.{ax}")) for ax in "xyz"], axis=1
    )
    quat = None
    if demo.has("q.w"):
        quat = np.stack(
            [np.interp(t_new, t_old, demo.channel(f"q.{c}")) for c in "wxyz"], axis=1
        )
        quat /= np.linalg.norm(quat, axis=1, keepdims=True)
    return SignalTrace.from_positions(dt_new, pos, quat)


def align_endpoints(demos: list[SignalTrace]) -> list[SignalTrace]:
    """Affinely rescale each demo so all share the mean start and goal."""
    starts = np.stack([d.vector("y")[0] for d in demos])
    goals = np.stack([d.vector("y")[-1] for d in demos])
    start, goal = starts.mean(axis=0), goals.mean(axis=0)
    out = []
    for d in demos:
        y = d.vector("y")
        y0, y1 = y[0], y[-1]
        span = y1 - y0
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(np.abs(span) > 1e-12, (goal - start) / span, 1.0)
        aligned = start + (y - y0) * scale
        aligned[0], aligned[-1] = start, goal
        out.append(SignalTrace.from_positions(d.dt, aligned))
    return out


def build_demo_set(demos: list[SignalTrace], n_samples: int | None = None) -> DemoSet:
    n_samples = n_samples or max(len(d) for d in demos)
    return DemoSet(align_endpoints([resample(d, n_samples) for d in demos]))


def fit_gmm_gmr(
    demo_set: DemoSet,
    n_components: int = 8,
    seed: int = 0,
    max_iter: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """GMM over (phi, y) joint space, then regression conditioned on phi.

    Returns (mean (T,3), cov (T,3,3)) evaluated at the T phase samples.
    Degenerate covariances are floored at COV_FLOOR on the diagonal.
    """
    if n_components < 1:
        raise DemoStatsError("n_components must be >= 1")
    T = demo_set.length
    n_total = T * len(demo_set.demos)
    if n_total < 10 * n_components:
        raise DemoStatsError(
            f"too few samples ({n_total}) for {n_components} components; "
            "need >= 10 per component"
        )
    phase = np.linspace(1.0, 0.0, T)
    X = np.concatenate(
        [np.column_stack([phase, d.vector("y")]) for d in demo_set.demos]
    )
    gmm = GaussianMixture(
        n_components=n_components,
        covariance_type="full",
        reg_covar=COV_FLOOR,
        random_state=seed,
        max_iter=max_iter,
        init_params="kmeans",
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gmm.fit(X)
    if not gmm.converged_:
        warnings.warn(
            "GMM EM did not converge within max_iter; using best-so-far parameters",
            stacklevel=2,
        )
    mu = gmm.means_                      # (K, 4)
    Sigma = gmm.covariances_             # (K, 4, 4)
    pi = gmm.weights_
    mean = np.empty((T, 3))
    cov = np.empty((T, 3, 3))
    # per-component conditional regressors y | phi
    s_pp = Sigma[:, 0, 0]                                   # (K,)
    s_yp = Sigma[:, 1:, 0]                                  # (K, 3)
    cond_cov = Sigma[:, 1:, 1:] - s_yp[:, :, None] * s_yp[:, None, :] / s_pp[:, None, None]
    for t, p in enumerate(phase):
        log_h = (
            np.log(pi)
            - 0.5 * np.log(2 * np.pi * s_pp)
            - 0.5 * (p - mu[:, 0]) ** 2 / s_pp
        )
        log_h -= log_h.max()
        h = np.exp(log_h)
        h /= h.sum()
        cond_mean = mu[:, 1:] + s_yp * ((p - mu[:, 0]) / s_pp)[:, None]   # (K, 3)
        m = h @ cond_mean
        spread = cond_mean - m
        c = np.einsum("k,kij->ij", h, cond_cov) + np.einsum(
            "k,ki,kj->ij", h, spread, spread
        )
        mean[t] = m
        cov[t] = 0.5 * (c + c.T)
    return mean, cov


def time_weights(variances: np.ndarray) -> np.ndarray:
    """Per-axis time weights: w_i = exp(-sigma_i / mean(sigma)) for each axis.

    variances is (T, 3); returns (3, T).  An all-zero axis gets weights 1.
    """
    variances = np.asarray(variances, dtype=float)
    if np.any(variances < 0):
        raise DemoStatsError("variances must be nonnegative")
    out = np.ones((variances.shape[1], variances.shape[0]))
    for d in range(variances.shape[1]):
        sigma = variances[:, d]
        mean_sigma = sigma.mean()
        if mean_sigma > 0:
            out[d] = np.exp(-sigma / mean_sigma)
    return out


def space_weights(variances: np.ndarray) -> np.ndarray:
    """Per-sample axis weights: w_t^d = exp(-sigma_t^d / mean over axes)."""
    variances = np.asarray(variances, dtype=float)
    if np.any(variances < 0):
        raise DemoStatsError("variances must be nonnegative")
    out = np.ones_like(variances)
    axis_mean = variances.mean(axis=1)
    nz = axis_mean > 0
    out[nz] = np.exp(-variances[nz] / axis_mean[nz, None])
    return out


def combine_weights(W_time: np.ndarray, W_space: np.ndarray) -> np.ndarray:
    """Element-wise product: W[t, d] = W_space[t, d] * W_time[d, t]."""
    W_time = np.asarray(W_time, dtype=float)
    W_space = np.asarray(W_space, dtype=float)
    if W_time.shape != (W_space.shape[1], W_space.shape[0]):
        raise DemoStatsError(
            f"shape mismatch: W_time {W_time.shape} vs W_space {W_space.shape}"
        )
    return W_space * W_time.T


def compute_stats(
    demo_set: DemoSet, n_components: int = 8, seed: int = 0
) -> DemoStats:
    """Full pipeline: GMR mean/cov plus the combined weight matrix.

    With a single demonstration the variance is zero everywhere and the
    weights degrade to identity.
    """
    if len(demo_set.demos) == 1:
        y = demo_set.demos[0].vector("y")
        T = len(y)
        return DemoStats(
            mean=y,
            cov=np.zeros((T, 3, 3)),
            W_time=np.ones((3, T)),
            W_space=np.ones((T, 3)),
            W=np.ones((T, 3)),
        )
    mean, cov = fit_gmm_gmr(demo_set, n_components=n_components, seed=seed)
    variances = np.stack([np.diag(c) for c in cov])
    Wt = time_weights(variances)
    Ws = space_weights(variances)
    return DemoStats(mean=mean, cov=cov, W_time=Wt, W_space=Ws, W=combine_weights(Wt, Ws))
