"""Point-to-point dynamic movement primitives.

The transformation system is a critically damped spring-damper pulled
toward the goal, modulated by a phase-indexed forcing term:

    tau * v' = alpha * (beta * (y_g - y) - v) + F(phi)
    tau * y' = v

The phase phi decays exponentially from 1 toward 0, gating the forcing
term so the attractor dominates at the end of the motion.  Integration
is explicit Euler by default, which keeps the map F -> trajectory
exactly affine; an RK4 switch is available for accuracy studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trace import SignalTrace


class DmpError(ValueError):
    pass


@dataclass(frozen=True)
class CanonicalSystem:
    """Exponential phase clock phi(k) = exp(-alpha_phase * k*dt / tau)."""

    tau: float
    dt: float
    alpha_phase: float = float(np.log(100.0))

    def __post_init__(self):
        if self.tau <= 0 or self.dt <= 0 or self.alpha_phase <= 0:
            raise DmpError("tau, dt and alpha_phase must be positive")

    def phase(self, n_samples: int) -> np.ndarray:
        k = np.arange(n_samples)
        return np.exp(-self.alpha_phase * k * self.dt / self.tau)


@dataclass(frozen=True)
class BasisSet:
    """Von-Mises-style basis Psi_i(phi) = exp(h_i * (cos(phi - c_i) - 1)).

    Centers are uniform over the phase range; widths make adjacent bases
    overlap at ~0.5 activation.  Activation peaks at 1 when phi = c_i.
    """

    centers: np.ndarray
    widths: np.ndarray

    @staticmethod
    def uniform(n_basis: int, phase: np.ndarray) -> "BasisSet":
        if n_basis < 2:
            raise DmpError(f"need at least 2 basis functions, got {n_basis}")
        lo, hi = float(phase.min()), float(phase.max())
        centers = np.linspace(hi, lo, n_basis)
        spacing = abs(centers[0] - centers[1])
        h = np.log(2.0) / (1.0 - np.cos(spacing / 2.0))
        return BasisSet(centers, np.full(n_basis, h))

    def activations(self, phase: np.ndarray) -> np.ndarray:
        """(T, N) activation matrix."""
        phase = np.asarray(phase, dtype=float)
        return np.exp(self.widths * (np.cos(phase[:, None] - self.centers) - 1.0))

    def design_matrix(self, phase: np.ndarray) -> np.ndarray:
        """Normalized activations: rows sum to 1 (amplitude fixed to 1)."""
        act = self.activations(phase)
        return act / act.sum(axis=1, keepdims=True)


@dataclass
class DmpModel:
    """Position DMP with learned time-indexed forcing and basis weights."""

    alpha: float
    beta: float
    tau: float
    dt: float
    y_init: np.ndarray
    y_goal: np.ndarray
    F_lrn: np.ndarray
    basis: BasisSet | None = None
    weights: np.ndarray | None = None  # (N, 3)
    canonical: CanonicalSystem = field(init=False)

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise DmpError("alpha and beta must be positive")
        self.y_init = np.asarray(self.y_init, dtype=float).reshape(3)
        self.y_goal = np.asarray(self.y_goal, dtype=float).reshape(3)
        self.F_lrn = np.asarray(self.F_lrn, dtype=float)
        if self.F_lrn.ndim != 2 or self.F_lrn.shape[1] != 3:
            raise DmpError(f"F_lrn must be (T, 3), got {self.F_lrn.shape}")
        self.canonical = CanonicalSystem(self.tau, self.dt)

    @property
    def n_samples(self) -> int:
        return self.F_lrn.shape[0]

    def phase(self, n_samples: int | None = None) -> np.ndarray:
        return self.canonical.phase(n_samples or self.n_samples)


def differentiate(values: np.ndarray, dt: float) -> np.ndarray:
    """Central differences with one-sided endpoints."""
    return np.gradient(values, dt, axis=0)


def learn_forcing(
    demo: SignalTrace,
    alpha: float,
    beta: float,
    tau: float,
    y_goal: np.ndarray | None = None,
) -> np.ndarray:
    """Sample-wise forcing that reproduces the demo under the DMP dynamics.

    F = tau^2 * y'' - alpha * (beta * (y_g - y) - tau * y')
    """
    if len(demo) < 3:
        raise DmpError(f"demo too short: need >= 3 samples, got {len(demo)}")
    y = demo.vector("y")
    y_goal = np.asarray(y_goal if y_goal is not None else y[-1], dtype=float)
    yd = differentiate(y, demo.dt)
    ydd = differentiate(yd, demo.dt)
    return forcing_from_derivatives(y, yd, ydd, alpha, beta, tau, y_goal)


def forcing_from_derivatives(y, yd, ydd, alpha, beta, tau, y_goal) -> np.ndarray:
    return tau**2 * ydd - alpha * (beta * (y_goal - y) - tau * yd)


def fit_basis(
    F_lrn: np.ndarray, phase: np.ndarray, n_basis: int
) -> tuple[BasisSet, np.ndarray, float]:
    """Least-squares basis weights reproducing F_lrn; returns (basis, weights, rmse)."""
    F_lrn = np.asarray(F_lrn, dtype=float)
    T = F_lrn.shape[0]
    if n_basis > T:
        raise DmpError(
            f"basis count {n_basis} exceeds sample count {T}: regression is rank-deficient"
        )
    basis = BasisSet.uniform(n_basis, phase)
    A = basis.design_matrix(phase)
    weights, *_ = np.linalg.lstsq(A, F_lrn, rcond=None)
    residual = A @ weights - F_lrn
    rmse = float(np.sqrt(np.mean(residual**2)))
    return basis, weights, rmse


def learn_dmp(
    demo: SignalTrace,
    alpha: float = 25.0,
    beta: float | None = None,
    tau: float | None = None,
    n_basis: int = 25,
) -> DmpModel:
    """Learn a full DMP (forcing + basis fit) from a position demo."""
    beta = alpha / 4.0 if beta is None else beta
    tau = (len(demo) - 1) * demo.dt if tau is None else tau
    y = demo.vector("y")
    F_lrn = learn_forcing(demo, alpha, beta, tau, y[-1])
    model = DmpModel(
        alpha=alpha,
        beta=beta,
        tau=tau,
        dt=demo.dt,
        y_init=y[0],
        y_goal=y[-1],
        F_lrn=F_lrn,
    )
    basis, weights, _ = fit_basis(F_lrn, model.phase(), n_basis)
    model.basis = basis
    model.weights = weights
    return model


def rollout_arrays(
    model: DmpModel,
    F: np.ndarray,
    y_init: np.ndarray | None = None,
    y_goal: np.ndarray | None = None,
    method: str = "euler",
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the DMP forward; returns (positions, scaled velocities v).

    Physical velocity is v / tau.  F must have one row per output sample;
    F[k] acts on the step from sample k to k+1 (the last row is unused).
    """
    F = np.asarray(F, dtype=float)
    y0 = np.asarray(y_init if y_init is not None else model.y_init, dtype=float)
    yg = np.asarray(y_goal if y_goal is not None else model.y_goal, dtype=float)
    T = F.shape[0]
    h = model.dt / model.tau
    y = np.empty((T, 3))
    v = np.empty((T, 3))
    y[0], v[0] = y0, 0.0
    a, b = model.alpha, model.beta
    if method == "euler":
        for k in range(T - 1):
            acc = a * (b * (yg - y[k]) - v[k]) + F[k]
            y[k + 1] = y[k] + h * v[k]
            v[k + 1] = v[k] + h * acc
    elif method == "rk4":
        def deriv(yk, vk, Fk):
            return vk, a * (b * (yg - yk) - vk) + Fk

        for k in range(T - 1):
            Fk = F[k]
            k1y, k1v = deriv(y[k], v[k], Fk)
            k2y, k2v = deriv(y[k] + 0.5 * h * k1y, v[k] + 0.5 * h * k1v, Fk)
            k3y, k3v = deriv(y[k] + 0.5 * h * k2y, v[k] + 0.5 * h * k2v, Fk)
            k4y, k4v = deriv(y[k] + h * k3y, v[k] + h * k3v, Fk)
            y[k + 1] = y[k] + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            v[k + 1] = v[k] + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    else:
        raise DmpError(f"unknown integration method {method!r}")
    if not np.all(np.isfinite(y)):
        raise DmpError(
            "rollout diverged to non-finite state; check gains and time constant"
        )
    return y, v


def rollout(
    model: DmpModel,
    F: np.ndarray | None = None,
    y_init: np.ndarray | None = None,
    y_goal: np.ndarray | None = None,
    method: str = "euler",
) -> SignalTrace:
    """Roll the DMP out to a trace with position and derived velocity channels."""
    F = model.F_lrn if F is None else F
    y, _ = rollout_arrays(model, F, y_init, y_goal, method)
    return SignalTrace.from_positions(model.dt, y)


def rollout_adjoint(model: DmpModel, dL_dy: np.ndarray) -> np.ndarray:
    """Gradient of sum(dL_dy * y) w.r.t. F for the Euler rollout.

    Reverse-mode sweep of the (affine) Euler recursion; dL_dy is (T, 3)
    and the result is (T, 3) with a zero last row (F[T-1] never acts).
    """
    dL_dy = np.asarray(dL_dy, dtype=float)
    T = dL_dy.shape[0]
    h = model.dt / model.tau
    a, b = model.alpha, model.beta
    gy = np.zeros(3)
    gv = np.zeros(3)
    gF = np.zeros((T, 3))
    for k in range(T - 2, -1, -1):
        gy_next = gy + dL_dy[k + 1]
        gv_next = gv
        # forward: y[k+1] = y[k] + h v[k];  v[k+1] = v[k] + h (a(b(yg-y[k]) - v[k]) + F[k])
        gF[k] = h * gv_next
        gy = gy_next - h * a * b * gv_next
        gv = h * gy_next + (1.0 - h * a) * gv_next
    return gF
