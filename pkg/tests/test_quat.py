"""Quaternion algebra and orientation primitive checks."""

import numpy as np
import pytest

from stldmp.dmp import DmpError
from stldmp.quat import (
    QuatDmpModel,
    goal_pull,
    learn_forcing_quat,
    quat_angle,
    quat_conjugate,
    quat_exp,
    quat_log,
    quat_multiply,
    rollout_quat,
    rotation_speed,
)
from stldmp.trace import SignalTrace


def rot_quat(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def slerp_demo(q0, q1, n=120, dt=0.02):
    """Constant-speed interpolation q(t) = exp(t*log(q1 q0*)) q0."""
    delta = quat_log(quat_multiply(q1, quat_conjugate(q0)))
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5  # smooth timing, rest at the ends
    q = np.stack([quat_multiply(quat_exp(si * delta), q0) for si in s])
    pos = np.zeros((n, 3))
    return SignalTrace.from_positions(dt, pos, q)


# --- algebra -------------------------------------------------------------------


def test_multiplication_against_hand_computed_product():
    # Composing two 90-degree rotations about orthogonal axes gives a
    # 120-degree rotation about a diagonal axis (standard identity):
    #   qz * qx = 120 deg about ( 1, 1, 1)/sqrt(3)
    #   qx * qz = 120 deg about ( 1,-1, 1)/sqrt(3)
    qz = rot_quat([0, 0, 1], np.pi / 2)
    qx = rot_quat([1, 0, 0], np.pi / 2)
    assert np.allclose(quat_multiply(qz, qx), rot_quat([1, 1, 1], 2 * np.pi / 3),
                       atol=1e-12)
    assert np.allclose(quat_multiply(qx, qz), rot_quat([1, -1, 1], 2 * np.pi / 3),
                       atol=1e-12)


def test_log_exp_are_inverse_on_both_hemispheres():
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.normal(scale=1.0, size=3)
        if np.linalg.norm(v) >= np.pi:  # keep within the injective radius
            v *= 0.9 * np.pi / np.linalg.norm(v)
        assert np.allclose(quat_log(quat_exp(v)), v, atol=1e-12)
        q = quat_exp(v)
        assert np.allclose(quat_exp(quat_log(q)), q, atol=1e-12)


def test_small_angle_log_is_finite_and_linear():
    v = np.array([1e-10, -2e-10, 0.5e-10])
    q = quat_exp(v)
    back = quat_log(q)
    assert np.all(np.isfinite(back))
    assert np.allclose(back, v, atol=1e-15)


def test_angle_between_quaternions_matches_construction():
    rng = np.random.default_rng(1)
    for _ in range(50):
        axis = rng.normal(size=3)
        angle = rng.uniform(0.01, np.pi - 0.01)
        q0 = rot_quat(rng.normal(size=3), rng.uniform(0, np.pi))
        q1 = quat_multiply(rot_quat(axis, angle), q0)
        assert quat_angle(q0, q1) == pytest.approx(angle, abs=1e-9)
        # sign flips represent the same rotation
        assert quat_angle(q0, -q1) == pytest.approx(angle, abs=1e-9)


def test_goal_pull_is_zero_at_goal_and_points_along_shortest_arc():
    q = rot_quat([0, 1, 0], 0.8)
    assert np.allclose(goal_pull(q, q), 0.0, atol=1e-12)
    qg = quat_multiply(rot_quat([0, 0, 1], 0.5), q)
    pull = goal_pull(q, qg)
    assert np.linalg.norm(pull) == pytest.approx(0.5, abs=1e-9)
    assert np.allclose(pull / np.linalg.norm(pull), [0, 0, 1], atol=1e-9)


def test_rotation_speed_constant_rate_hand_value():
    # steps of 0.03 rad at dt = 0.01 -> 3 rad/s everywhere, first sample copied
    dt, step = 0.01, 0.03
    q = np.stack([rot_quat([0, 0, 1], k * step) for k in range(20)])
    speed = rotation_speed(q, dt)
    assert np.allclose(speed, 3.0, atol=1e-9)
    assert speed[0] == speed[1]


# --- orientation primitive --------------------------------------------------------


def test_learned_orientation_reproduces_demo():
    q0 = rot_quat([1, 0, 0], 0.3)
    q1 = quat_multiply(rot_quat([0, 0, 1], 1.4), q0)
    demo = slerp_demo(q0, q1)
    tau = (len(demo) - 1) * demo.dt
    F_q = learn_forcing_quat(demo, alpha_q=25.0, beta_q=6.25, tau_q=tau)
    model = QuatDmpModel(25.0, 6.25, tau, demo.dt, q0, q1, F_q)
    trace = rollout_quat(model)
    q_demo = np.stack([demo.channel(f"q.{c}") for c in "wxyz"], axis=1)
    q_roll = np.stack([trace.channel(f"q.{c}") for c in "wxyz"], axis=1)
    angles = [quat_angle(a, b) for a, b in zip(q_demo, q_roll)]
    assert max(angles) <= 0.01 * 1.4  # within 1% of the total rotation


def test_unforced_rollout_converges_to_goal():
    q0 = rot_quat([1, 0, 0], 0.2)
    q1 = rot_quat([0, 1, 0], 1.0)
    model = QuatDmpModel(25.0, 6.25, 1.0, 0.02, q0, q1, np.zeros((151, 3)))
    trace = rollout_quat(model, np.zeros((151, 3)))
    q_end = np.array([trace.channel(f"q.{c}")[-1] for c in "wxyz"])
    assert quat_angle(q_end, q1) <= 1e-2


def test_rollout_emits_unit_quaternions_and_speed_channel():
    q0 = rot_quat([0, 0, 1], 0.1)
    q1 = rot_quat([0, 0, 1], 1.2)
    demo = slerp_demo(q0, q1, n=80)
    tau = (len(demo) - 1) * demo.dt
    F_q = learn_forcing_quat(demo, 25.0, 6.25, tau)
    model = QuatDmpModel(25.0, 6.25, tau, demo.dt, q0, q1, F_q)
    trace = rollout_quat(model)
    q = np.stack([trace.channel(f"q.{c}") for c in "wxyz"], axis=1)
    assert np.allclose(np.linalg.norm(q, axis=1), 1.0, atol=1e-12)
    speed = trace.channel("qspeed")
    assert np.all(speed >= 0)
    assert speed[0] == speed[1]
    # slerp under smooth timing peaks near the middle, rests at the ends
    assert speed[len(speed) // 2] > 5 * max(speed[1], speed[-1])


def test_opposite_hemisphere_goal_is_flipped_with_warning():
    q0 = rot_quat([0, 0, 1], 0.1)
    q1 = -rot_quat([0, 0, 1], 0.4)
    with pytest.warns(UserWarning, match="hemisphere"):
        model = QuatDmpModel(25.0, 6.25, 1.0, 0.02, q0, q1, np.zeros((10, 3)))
    assert float(np.dot(model.q_init, model.q_goal)) > 0


def test_learning_rejects_too_short_demo_and_zero_quaternion():
    pos = np.zeros((2, 3))
    q = np.tile(rot_quat([0, 0, 1], 0.3), (2, 1))
    demo = SignalTrace.from_positions(0.02, pos, q)
    with pytest.raises(DmpError, match="demo too short"):
        learn_forcing_quat(demo, 25.0, 6.25, 1.0)
    with pytest.raises(DmpError, match="zero quaternion"):
        QuatDmpModel(25.0, 6.25, 1.0, 0.02, np.zeros(4), q[0], np.zeros((5, 3)))
