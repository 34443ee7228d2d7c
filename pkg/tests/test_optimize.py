"""Constrained forcing-term optimization: gradients, invariants, outcomes."""

import numpy as np
import pytest

from stldmp.dmp import learn_dmp, rollout_arrays
from stldmp.optimize import (
    OptimizationProblem,
    OptimizerConfig,
    OptimizationError,
    _objective_stl_with_grad,
    objective_stl,
    optimize,
    optimize_trajectory_objective,
)
from stldmp.quat import QuatDmpModel, learn_forcing_quat, quat_exp, quat_log, \
    quat_multiply, quat_conjugate
from stldmp.stl import parse, robustness
from stldmp.trace import SignalTrace


def min_jerk(start, end, n=81, dt=0.02, arc=0.0):
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    pos = np.outer(1 - s, start) + np.outer(s, end)
    pos[:, 2] += arc * np.sin(np.pi * t)
    return SignalTrace.from_positions(dt, pos)


def straight_model(n=81):
    return learn_dmp(min_jerk([0, 0, 0], [0.8, 0.2, 0.0], n=n))


def obstacle_problem(**cfg_kwargs):
    """Straight demo through a sphere the constraint must avoid."""
    model = straight_model()
    constraint = parse("G[0,80](norm2(y - [0.4,0.1,0.0]) > 0.1)")
    cfg = dict(lambda1=5000.0, rho_min=0.02, temperature=0.005,
               max_iters=400, anneal_every=0)
    cfg.update(cfg_kwargs)
    return OptimizationProblem(model=model, constraint=constraint,
                               config=OptimizerConfig(**cfg))


# --- objective and gradient ---------------------------------------------------


def test_zero_stl_weight_keeps_the_learned_forcing():
    problem = obstacle_problem(lambda1=0.0)
    result = optimize(problem)
    assert np.max(np.abs(result.F_opt - problem.model.F_lrn)) <= 1e-8


def test_penalty_gradient_matches_finite_differences():
    problem = obstacle_problem()
    rng = np.random.default_rng(0)
    F = problem.model.F_lrn + rng.normal(scale=2.0, size=problem.model.F_lrn.shape)
    value, grad, _ = _objective_stl_with_grad(problem, F, temperature=0.01)
    assert value > 0  # straight path violates the constraint
    eps = 1e-5
    for k, j in [(5, 0), (30, 1), (40, 0), (60, 2)]:
        Fp = F.copy()
        Fp[k, j] += eps
        Fm = F.copy()
        Fm[k, j] -= eps
        fd = (objective_stl(problem, Fp, 0.01) - objective_stl(problem, Fm, 0.01)) / (2 * eps)
        scale = max(abs(fd), abs(grad[k, j]), 1e-8)
        assert abs(grad[k, j] - fd) / scale <= 1e-3


def test_hinge_penalty_is_zero_when_margin_is_met():
    model = straight_model()
    # trivially satisfied constraint far from the path
    problem = OptimizationProblem(
        model=model,
        constraint=parse("G[0,80](norm2(y - [5,5,5]) > 0.1)"),
        config=OptimizerConfig(lambda1=100.0, rho_min=0.02, temperature=0.01),
    )
    assert objective_stl(problem, model.F_lrn) == 0.0


# --- full optimization -----------------------------------------------------------


def test_obstacle_avoidance_satisfies_margin_and_preserves_endpoints():
    problem = obstacle_problem()
    result = optimize(problem)
    assert result.status == "satisfied"
    assert result.robustness_exact >= problem.config.rho_min - 1e-9
    y = result.trace.vector("y")
    y_lrn, _ = rollout_arrays(problem.model, problem.model.F_lrn)
    # endpoint-influence projection keeps start and goal samples exact
    assert np.max(np.abs(y[0] - y_lrn[0])) <= 1e-12
    assert np.max(np.abs(y[-1] - y_lrn[-1])) <= 1e-12
    assert robustness(problem.constraint, result.trace, 0) == pytest.approx(
        result.robustness_exact
    )


def test_objective_history_is_monotone_without_annealing():
    result = optimize(obstacle_problem(anneal_every=0))
    history = np.array(result.objective_history)
    assert np.all(np.diff(history) <= 1e-12)


def test_optimization_is_deterministic():
    r1 = optimize(obstacle_problem())
    r2 = optimize(obstacle_problem())
    assert np.array_equal(r1.F_opt, r2.F_opt)
    assert r1.objective_history == r2.objective_history
    assert r1.robustness_exact == r2.robustness_exact


def test_unsatisfiable_margin_reports_best_effort():
    # the sphere contains both endpoints, so no trajectory can satisfy it
    model = straight_model()
    problem = OptimizationProblem(
        model=model,
        constraint=parse("G[0,80](norm2(y - [0.4,0.1,0.0]) > 5.0)"),
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.02, temperature=0.01,
                               max_iters=50),
    )
    result = optimize(problem)
    assert result.status == "best-effort"
    assert result.robustness_exact < 0


def test_trajectory_objective_strays_further_in_forcing_space():
    problem = obstacle_problem()
    r_forcing = optimize(problem)
    r_traj = optimize_trajectory_objective(obstacle_problem())
    assert r_forcing.status == "satisfied" and r_traj.status == "satisfied"
    W = np.ones_like(problem.model.F_lrn)

    def forcing_distance(F):
        return float(np.linalg.norm(W * (F - problem.model.F_lrn)))

    assert forcing_distance(r_forcing.F_opt) < forcing_distance(r_traj.F_opt)


def test_variance_weights_steer_deviation_to_cheap_axes():
    # Make deviation on y expensive and z free; the optimizer should
    # dodge the obstacle mostly in z.  The demo gets a small z arc so the
    # obstacle gradient has a nonzero z component to follow.
    model = learn_dmp(min_jerk([0, 0, 0], [0.8, 0.2, 0.0], arc=0.02))
    W = np.ones_like(model.F_lrn)
    W[:, 1] = 3.0
    W[:, 2] = 0.2
    problem = OptimizationProblem(
        model=model,
        constraint=parse("G[0,80](norm2(y - [0.4,0.1,0.0]) > 0.1)"),
        W=W,
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.02, temperature=0.005,
                               max_iters=800, anneal_every=0),
    )
    result = optimize(problem)
    assert result.status == "satisfied"
    y = result.trace.vector("y")
    y_lrn, _ = rollout_arrays(model, model.F_lrn)
    dev = np.abs(y - y_lrn)
    assert dev[:, 2].max() > 3 * dev[:, 1].max()


def test_endpoint_overrides_rebind_the_motion():
    model = straight_model()
    problem = OptimizationProblem(
        model=model,
        constraint=parse("G[0,80](norm2(y - [5,5,5]) > 0.1)"),
        y_init=np.array([0.1, 0.1, 0.0]),
        y_goal=np.array([0.6, 0.4, 0.1]),
        config=OptimizerConfig(lambda1=10.0),
    )
    result = optimize(problem)
    y = result.trace.vector("y")
    assert np.allclose(y[0], [0.1, 0.1, 0.0], atol=1e-12)
    assert np.allclose(y[-1], [0.6, 0.4, 0.1], atol=5e-3)


def test_bad_config_is_rejected():
    with pytest.raises(OptimizationError):
        OptimizerConfig(lambda1=-1.0)
    with pytest.raises(OptimizationError):
        OptimizerConfig(lambda2=0.0)
    with pytest.raises(OptimizationError):
        OptimizerConfig(rho_min=-0.1)


# --- joint position + orientation -------------------------------------------------


def rot_quat(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def test_joint_optimization_bounds_rotation_speed():
    n, dt = 81, 0.02
    demo = min_jerk([0, 0, 0], [0.8, 0.2, 0.0], n=n, dt=dt)
    model = learn_dmp(demo)
    q0 = rot_quat([0, 0, 1], 0.0)
    q1 = rot_quat([0, 0, 1], 1.2)
    delta = quat_log(quat_multiply(q1, quat_conjugate(q0)))
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    quats = np.stack([quat_multiply(quat_exp(si * delta), q0) for si in s])
    qdemo = demo.with_channels({f"q.{c}": quats[:, j] for j, c in enumerate("wxyz")})
    F_q = learn_forcing_quat(qdemo, 25.0, 6.25, model.tau)
    quat_model = QuatDmpModel(25.0, 6.25, model.tau, dt, q0, q1, F_q)

    from stldmp.quat import rollout_quat

    peak = rollout_quat(quat_model).channel("qspeed").max()
    bound = 0.8 * peak
    problem = OptimizationProblem(
        model=model,
        constraint=parse(f"G[0,{n - 1}](qspeed < {bound})"),
        quat_model=quat_model,
        config=OptimizerConfig(lambda1=5000.0, rho_min=0.01, temperature=0.01,
                               max_iters=150, anneal_every=0),
    )
    result = optimize(problem)
    assert result.status == "satisfied"
    assert result.F_q_opt is not None
    new_peak = result.trace.channel("qspeed").max()
    assert new_peak < bound
    # position forcing untouched: constraint only references orientation
    assert np.max(np.abs(result.F_opt - model.F_lrn)) <= 1e-9
    # orientation endpoints preserved
    q = np.stack([result.trace.channel(f"q.{c}") for c in "wxyz"], axis=1)
    assert np.allclose(q[0], q0, atol=1e-9)
    from stldmp.quat import quat_angle

    assert quat_angle(q[-1], q1) <= 0.02
