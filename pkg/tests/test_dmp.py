"""Movement primitive learning, rollout, and adjoint checks."""

import numpy as np
import pytest

from stldmp.dmp import (
    BasisSet,
    CanonicalSystem,
    DmpError,
    DmpModel,
    fit_basis,
    learn_dmp,
    learn_forcing,
    rollout,
    rollout_adjoint,
    rollout_arrays,
)
from stldmp.trace import SignalTrace


def min_jerk(start, end, n_samples=151, dt=0.02, arc=0.0):
    t = np.linspace(0.0, 1.0, n_samples)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    pos = np.outer(1 - s, start) + np.outer(s, end)
    pos[:, 2] += arc * np.sin(np.pi * t)
    return SignalTrace.from_positions(dt, pos)


# --- learning rule ------------------------------------------------------------


def test_forcing_matches_hand_computed_values():
    # Demo y(t) = t^2 on the x axis, 5 samples at dt = 0.1, goal = 0.16.
    # With alpha = 4, beta = 1, tau = 1 and central differences:
    #   k=0 (one-sided): yd = 0.1,  ydd = 1.0 -> F = 1.0 - 4*(0.16 - 0.1)  = 0.76
    #   k=2:             yd = 0.4,  ydd = 2.0 -> F = 2.0 - 4*(0.12 - 0.4)  = 3.12
    #   k=4 (one-sided): yd = 0.7,  ydd = 1.0 -> F = 1.0 - 4*(0.0  - 0.7)  = 3.80
    t = np.arange(5) * 0.1
    demo = SignalTrace.from_positions(0.1, np.outer(t**2, [1.0, 0.0, 0.0]))
    F = learn_forcing(demo, alpha=4.0, beta=1.0, tau=1.0)
    assert F[0, 0] == pytest.approx(0.76, abs=1e-12)
    assert F[2, 0] == pytest.approx(3.12, abs=1e-12)
    assert F[4, 0] == pytest.approx(3.80, abs=1e-12)
    assert np.allclose(F[:, 1:], 0.0)


def test_demo_too_short_is_rejected():
    demo = SignalTrace.from_positions(0.1, np.zeros((2, 3)))
    with pytest.raises(DmpError, match="demo too short"):
        learn_forcing(demo, 25.0, 6.25, 1.0)


def path_length(positions):
    return float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))


def test_learned_dmp_reproduces_its_demo_within_one_percent_rmse():
    demo = min_jerk([0.0, 0.0, 0.0], [0.8, 0.4, 0.2], arc=0.15)
    model = learn_dmp(demo)
    y, _ = rollout_arrays(model, model.F_lrn)
    ref = demo.vector("y")
    rmse = float(np.sqrt(np.mean(np.sum((y - ref) ** 2, axis=1))))
    assert rmse / path_length(ref) <= 0.01


def test_relearning_from_a_rollout_recovers_the_forcing_term():
    # Round trip rollout -> learn_forcing on a smooth forcing term (one
    # realizable as a motion with rest boundary conditions, so the
    # finite-difference derivatives are accurate at the endpoints).
    model = learn_dmp(min_jerk([0, 0, 0], [0.6, 0.2, 0.1], arc=0.1))
    F = learn_dmp(min_jerk([0, 0, 0], [0.6, 0.2, 0.1], arc=-0.25)).F_lrn
    trace = rollout(model, F)
    F_back = learn_forcing(trace, model.alpha, model.beta, model.tau, model.y_goal)
    rmse = float(np.sqrt(np.mean((F_back - F) ** 2)))
    assert rmse / np.max(np.abs(F)) <= 0.02


# --- rollout properties ---------------------------------------------------------


def test_rollout_is_affine_in_the_forcing_term():
    demo = min_jerk([0, 0, 0], [1, 0.5, 0], n_samples=80)
    model = learn_dmp(demo)
    T = model.n_samples
    zero, _ = rollout_arrays(model, np.zeros((T, 3)))
    rng = np.random.default_rng(0)
    for _ in range(50):
        F1 = rng.normal(size=(T, 3))
        F2 = rng.normal(size=(T, 3))
        y12, _ = rollout_arrays(model, F1 + F2)
        y1, _ = rollout_arrays(model, F1)
        y2, _ = rollout_arrays(model, F2)
        assert np.max(np.abs(y12 - (y1 + y2 - zero))) < 1e-10


def test_unforced_rollout_converges_to_goal_after_three_time_constants():
    model = DmpModel(
        alpha=25.0,
        beta=6.25,
        tau=1.0,
        dt=0.02,
        y_init=np.array([0.0, 0.0, 0.0]),
        y_goal=np.array([0.4, -0.3, 0.7]),
        F_lrn=np.zeros((151, 3)),
    )
    T = int(round(3 * model.tau / model.dt)) + 1
    y, v = rollout_arrays(model, np.zeros((T, 3)))
    extent = np.linalg.norm(model.y_goal - model.y_init)
    assert np.linalg.norm(y[-1] - model.y_goal) <= 1e-2 * extent
    assert np.linalg.norm(v[-1]) <= 1e-2 * extent


def test_rollout_respects_endpoint_overrides():
    demo = min_jerk([0, 0, 0], [1, 0, 0], n_samples=60)
    model = learn_dmp(demo)
    y_init = np.array([0.2, 0.1, -0.1])
    y, _ = rollout_arrays(model, np.zeros_like(model.F_lrn) , y_init, [0.9, 0.2, 0.3])
    assert np.allclose(y[0], y_init)


def test_rk4_and_euler_agree_on_smooth_motion():
    demo = min_jerk([0, 0, 0], [0.6, 0.3, 0.1], arc=0.1)
    model = learn_dmp(demo)
    y_euler, _ = rollout_arrays(model, model.F_lrn, method="euler")
    y_rk4, _ = rollout_arrays(model, model.F_lrn, method="rk4")
    assert np.max(np.abs(y_euler - y_rk4)) < 5e-3
    with pytest.raises(DmpError, match="unknown integration method"):
        rollout_arrays(model, model.F_lrn, method="verlet")


def test_rollout_returns_trace_with_velocity_channels():
    demo = min_jerk([0, 0, 0], [0.3, 0.3, 0], n_samples=50)
    model = learn_dmp(demo)
    trace = rollout(model)
    for name in ("y.x", "y.y", "y.z", "vel.x", "vel.y", "vel.z"):
        assert name in trace.channel_names


# --- canonical system and basis -------------------------------------------------


def test_phase_starts_at_one_and_decays_to_one_percent_at_tau():
    cs = CanonicalSystem(tau=1.5, dt=0.01)
    n = int(round(cs.tau / cs.dt)) + 1
    phi = cs.phase(n)
    assert phi[0] == pytest.approx(1.0)
    assert np.all(np.diff(phi) < 0)
    assert phi[-1] == pytest.approx(0.01, rel=1e-9)


def test_basis_activations_peak_at_centers_and_rows_normalize():
    phase = CanonicalSystem(tau=1.0, dt=0.02).phase(100)
    basis = BasisSet.uniform(12, phase)
    act = basis.activations(basis.centers)
    assert np.allclose(np.diag(act), 1.0)
    A = basis.design_matrix(phase)
    assert np.allclose(A.sum(axis=1), 1.0)
    assert np.all(A >= 0)


def test_basis_fit_reproduces_smooth_forcing():
    demo = min_jerk([0, 0, 0], [0.7, 0.2, -0.1], arc=0.2)
    model = learn_dmp(demo, n_basis=30)
    A = model.basis.design_matrix(model.phase())
    recon = A @ model.weights
    rmse = float(np.sqrt(np.mean((recon - model.F_lrn) ** 2)))
    assert rmse / np.max(np.abs(model.F_lrn)) <= 0.02


def test_more_basis_functions_than_samples_is_an_error():
    with pytest.raises(DmpError, match="rank-deficient"):
        fit_basis(np.zeros((10, 3)), CanonicalSystem(1.0, 0.1).phase(10), 11)


# --- adjoint ---------------------------------------------------------------------


def test_adjoint_gradient_matches_finite_differences():
    demo = min_jerk([0, 0, 0], [0.5, 0.2, 0.1], n_samples=40)
    model = learn_dmp(demo)
    T = model.n_samples
    rng = np.random.default_rng(5)
    dL_dy = rng.normal(size=(T, 3))
    F0 = rng.normal(size=(T, 3))
    gF = rollout_adjoint(model, dL_dy)
    assert np.allclose(gF[-1], 0.0)

    def loss(F):
        y, _ = rollout_arrays(model, F)
        return float(np.sum(dL_dy * y))

    eps = 1e-6
    for k, j in [(0, 0), (5, 1), (20, 2), (T - 2, 0), (T - 1, 1)]:
        Fp = F0.copy()
        Fp[k, j] += eps
        Fm = F0.copy()
        Fm[k, j] -= eps
        fd = (loss(Fp) - loss(Fm)) / (2 * eps)
        assert gF[k, j] == pytest.approx(fd, abs=1e-6, rel=1e-6)
