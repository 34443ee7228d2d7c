"""Quaternion orientation DMPs.

The orientation attractor mirrors the position system in the tangent
space: eta plays the role of a scaled angular velocity and the goal
pull is 2*log(q_g * conj(q)), the rotation vector from q to q_g:

    tau * eta' = alpha_q * (beta_q * 2 log(q_g * conj(q)) - eta) + F_q(phi)
    tau * q'   = 0.5 * eta * q

Quaternions are (w, x, y, z).  The q update uses the exponential map of
the half-step rotation, so the unit norm is preserved to machine
precision before the explicit renormalization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dmp import CanonicalSystem, DmpError
from .trace import SignalTrace

_SMALL_ANGLE = 1e-8


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_log(q: np.ndarray) -> np.ndarray:
    """Logarithm of a unit quaternion as a rotation vector (half-angle axis).

    Below _SMALL_ANGLE the first-order series u / |q| is used to avoid 0/0.
    """
    w = np.clip(q[0], -1.0, 1.0)
    u = q[1:]
    norm_u = np.linalg.norm(u)
    if norm_u < _SMALL_ANGLE:
        return u.copy()
    angle = np.arctan2(norm_u, w)
    return angle * u / norm_u


def quat_exp(v: np.ndarray) -> np.ndarray:
    """Exponential map: rotation vector (half-angle axis) to unit quaternion."""
    angle = np.linalg.norm(v)
    if angle < _SMALL_ANGLE:
        q = np.concatenate([[1.0], v])
        return q / np.linalg.norm(q)
    return np.concatenate([[np.cos(angle)], np.sin(angle) * v / angle])


def quat_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle between two unit quaternions, in [0, pi].

    The sign ambiguity of the double cover is removed, so q and -q are
    treated as the same rotation.
    """
    d = quat_multiply(a, quat_conjugate(b))
    if d[0] < 0.0:
        d = -d
    return float(2.0 * np.linalg.norm(quat_log(d)))


def goal_pull(q: np.ndarray, q_goal: np.ndarray) -> np.ndarray:
    """2 log(q_g * conj(q)): rotation vector pulling q toward q_goal."""
    return 2.0 * quat_log(quat_multiply(q_goal, quat_conjugate(q)))


@dataclass
class QuatDmpModel:
    alpha_q: float
    beta_q: float
    tau_q: float
    dt: float
    q_init: np.ndarray
    q_goal: np.ndarray
    F_q_lrn: np.ndarray  # (T, 3) tangent-space forcing
    canonical: CanonicalSystem = field(init=False)

    def __post_init__(self):
        if self.alpha_q <= 0 or self.beta_q <= 0:
            raise DmpError("alpha_q and beta_q must be positive")
        self.q_init = _normalize(np.asarray(self.q_init, dtype=float))
        q_goal = _normalize(np.asarray(self.q_goal, dtype=float))
        if float(np.dot(self.q_init, q_goal)) < 0.0:
            warnings.warn(
                "q_init and q_goal lie in opposite hemispheres; flipping the "
                "sign of q_goal to take the shorter rotation",
                stacklevel=2,
            )
            q_goal = -q_goal
        self.q_goal = q_goal
        self.F_q_lrn = np.asarray(self.F_q_lrn, dtype=float)
        if self.F_q_lrn.ndim != 2 or self.F_q_lrn.shape[1] != 3:
            raise DmpError(f"F_q_lrn must be (T, 3), got {self.F_q_lrn.shape}")
        self.canonical = CanonicalSystem(self.tau_q, self.dt)

    @property
    def n_samples(self) -> int:
        return self.F_q_lrn.shape[0]


def _normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n == 0:
        raise DmpError("zero quaternion")
    return q / n


def learn_forcing_quat(
    demo: SignalTrace, alpha_q: float, beta_q: float, tau_q: float,
    q_goal: np.ndarray | None = None,
) -> np.ndarray:
    """Tangent-space forcing reproducing a quaternion demo.

    eta is recovered from finite rotation differences; F_q from the eta
    dynamics, mirroring the position learning rule.
    """
    if len(demo) < 3:
        raise DmpError(f"demo too short: need >= 3 samples, got {len(demo)}")
    q = np.stack([demo.channel(f"q.{c}") for c in "wxyz"], axis=1)
    q = np.array([_normalize(row) for row in q])
    # enforce hemisphere continuity along the demo
    for k in range(1, len(q)):
        if np.dot(q[k], q[k - 1]) < 0:
            q[k] = -q[k]
    qg = _normalize(np.asarray(q_goal if q_goal is not None else q[-1], dtype=float))
    T = len(q)
    omega = np.zeros((T, 3))
    for k in range(T - 1):
        omega[k] = 2.0 * quat_log(quat_multiply(q[k + 1], quat_conjugate(q[k]))) / demo.dt
    omega[T - 1] = omega[T - 2]
    eta = tau_q * omega
    eta_dot = np.gradient(eta, demo.dt, axis=0)
    F_q = np.empty((T, 3))
    for k in range(T):
        F_q[k] = tau_q * eta_dot[k] - alpha_q * (beta_q * goal_pull(q[k], qg) - eta[k])
    return F_q


def rollout_quat(
    model: QuatDmpModel,
    F_q: np.ndarray | None = None,
    q_init: np.ndarray | None = None,
    q_goal: np.ndarray | None = None,
) -> SignalTrace:
    """Integrate the orientation DMP; returns a trace with q.* channels."""
    F_q = model.F_q_lrn if F_q is None else np.asarray(F_q, dtype=float)
    q0 = _normalize(np.asarray(q_init if q_init is not None else model.q_init, dtype=float))
    qg = _normalize(np.asarray(q_goal if q_goal is not None else model.q_goal, dtype=float))
    if float(np.dot(q0, qg)) < 0.0:
        warnings.warn(
            "q_init and q_goal lie in opposite hemispheres; flipping q_goal",
            stacklevel=2,
        )
        qg = -qg
    T = F_q.shape[0]
    h = model.dt / model.tau_q
    q = np.empty((T, 4))
    eta = np.zeros((T, 3))
    q[0] = q0
    for k in range(T - 1):
        eta_dot = model.alpha_q * (model.beta_q * goal_pull(q[k], qg) - eta[k]) + F_q[k]
        eta[k + 1] = eta[k] + h * eta_dot
        # q' = 0.5 eta * q integrates exactly as a rotation increment
        q[k + 1] = _normalize(quat_multiply(quat_exp(0.5 * h * eta[k]), q[k]))
    if not np.all(np.isfinite(q)):
        raise DmpError("quaternion rollout diverged to non-finite state")
    channels = {f"q.{c}": q[:, j] for j, c in enumerate("wxyz")}
    for j, ax in enumerate("xyz"):
        channels[f"eta.{ax}"] = eta[:, j]
    channels["qspeed"] = rotation_speed(q, model.dt)
    return SignalTrace(model.dt, channels)


def rotation_speed(q: np.ndarray, dt: float) -> np.ndarray:
    """Rotation speed (rad/s) from quaternion first differences.

    speed[k] = angle(q[k-1], q[k]) / dt for k >= 1, speed[0] = speed[1],
    mirroring how position velocity channels are derived.
    """
    q = np.asarray(q, dtype=float)
    T = q.shape[0]
    speed = np.zeros(T)
    for k in range(1, T):
        speed[k] = quat_angle(q[k - 1], q[k]) / dt
    if T > 1:
        speed[0] = speed[1]
    return speed
