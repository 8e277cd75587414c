import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from footteleop import kinematics as kin
from footteleop.platform import (
    HumanFootModel,
    PlatformDomainError,
    PlatformDynamicsParams,
    PlatformState,
    SimulationFault,
    current_to_torque,
    measured_tip_force,
    platform_inverse_dynamics,
    platform_step,
    torque_to_current,
    work_done_by_actuator,
)

UNLOCKED = (False,) * 5


def settle(params, human, q0, force, seconds=5.0, dt=0.001):
    """Close the reflection loop around a constant platform-side force."""
    s = PlatformState.at(q0)
    tau = platform_inverse_dynamics(params, s, np.zeros(5), force)
    for k in range(int(round(seconds / dt))):
        s = platform_step(params, s, human, tau, dt, k * dt)
        tau = platform_inverse_dynamics(params, s, params.inertia_compensation * s.q_ddot, force)
    return s


def test_inverse_dynamics_ideal_force_only():
    params = PlatformDynamicsParams.ideal()
    tau = platform_inverse_dynamics(params, PlatformState.at(np.zeros(5)), np.zeros(5), [1.0, 0, 0])
    J = kin.translational_jacobian(np.zeros(5))
    assert np.allclose(tau, J.T @ [1.0, 0, 0])
    assert tau[1] == 1.0
    assert math.isclose(tau[3], 0.086) and math.isclose(tau[4], -0.300)


def test_inverse_dynamics_gravity_only():
    params = PlatformDynamicsParams(gravity_bias=np.array([0, 0, 0.4, 0, 0]), gravity_sine=np.array([0, 0, 1.0, 0, 0]))
    s = PlatformState.at([0, 0, 0.5, 0, 0])
    tau = platform_inverse_dynamics(params, s, np.zeros(5), np.zeros(3))
    assert np.allclose(tau, [0, 0, 0.4 + math.sin(0.5), 0, 0])


def test_inverse_dynamics_inertia_term():
    params = PlatformDynamicsParams(joint_inertias=np.array([2.0, 3.0, 0.05, 0.05, 0.05]))
    tau = platform_inverse_dynamics(params, PlatformState.at(np.zeros(5)), [1, 0, 0, 0, 0], np.zeros(3))
    assert tau[0] == -2.0
    assert np.all(tau[1:] == 0)


def test_params_validation():
    with pytest.raises(PlatformDomainError):
        PlatformDynamicsParams(joint_inertias=np.array([1, 0, 1, 1, 1.0]))
    with pytest.raises(PlatformDomainError):
        PlatformDynamicsParams(k_tau=0.0)
    with pytest.raises(PlatformDomainError):
        HumanFootModel(stiffness=-np.ones(5))
    with pytest.raises(PlatformDomainError):
        HumanFootModel({"gamma": [(0, 0)]})


def test_torque_to_current_examples():
    params = PlatformDynamicsParams(k_tau=0.1)
    assert torque_to_current(params, 0.0, 2) == 0.0
    assert math.isclose(torque_to_current(params, 0.447, 2), 1.0)
    # belt axes: joint force times pulley radius is the motor torque
    assert math.isclose(torque_to_current(params, 10.0, 0), 10.0 * 0.00915 / 0.1)


@given(st.floats(-50, 50), st.sampled_from([0, 1, 2]))
def test_current_round_trip(tau, joint):
    params = PlatformDynamicsParams()
    back = current_to_torque(params, torque_to_current(params, tau, joint), joint)
    assert abs(back - tau) <= 1e-12 * max(1.0, abs(tau))


@pytest.mark.parametrize("joint", [3, 4])
def test_passive_joints_have_no_current(joint):
    with pytest.raises(PlatformDomainError, match="passive"):
        torque_to_current(PlatformDynamicsParams(), 1.0, joint)
    with pytest.raises(PlatformDomainError):
        current_to_torque(PlatformDynamicsParams(), 1.0, joint)


def test_zero_dynamics():
    params = PlatformDynamicsParams(locked=UNLOCKED)
    human = HumanFootModel(stiffness=np.zeros(5), damping=np.zeros(5))
    q0 = np.array([0.01, -0.02, 0.1, 0.05, -0.1])
    s = PlatformState.at(q0)
    for k in range(100):
        s = platform_step(params, s, human, np.zeros(5), 0.001, k * 0.001)
    assert np.array_equal(s.q, q0)
    assert np.array_equal(s.q_dot, np.zeros(5))


@pytest.mark.parametrize("params", [PlatformDynamicsParams(), PlatformDynamicsParams.ideal()], ids=["inertial", "ideal"])
def test_static_transparency(params):
    q0 = np.array([0.02, -0.03, 0.2, 0.0, 0.0])
    force = np.array([3.0, -2.0, 1.0])
    s = settle(params, HumanFootModel.holding(q0), q0, force)
    assert np.max(np.abs(s.q_dot)) < 1e-9
    assert np.max(np.abs(s.tip_force - force)) <= 0.05


def test_transparency_with_gravity_compensation():
    params = PlatformDynamicsParams(gravity_bias=np.array([0, 0, 0.3, 0, 0]), gravity_sine=np.array([0, 0, 0.5, 0, 0]))
    q0 = np.array([0.0, 0.05, -0.4, 0.0, 0.0])
    force = np.array([-1.0, 4.0, 2.5])
    s = settle(params, HumanFootModel.holding(q0), q0, force)
    assert np.max(np.abs(s.tip_force - force)) <= 0.05


def test_measured_force_recovers_cartesian_force():
    params = PlatformDynamicsParams()
    q = np.array([0.0, 0.0, 0.3, 0.0, 0.0])
    F = np.array([1.0, 2.0, -3.0])
    tau = kin.translational_jacobian(q).T @ F
    assert np.allclose(measured_tip_force(params, q, tau), F)
    # with all joints free the least-squares fit is still exact for a consistent torque
    assert np.allclose(measured_tip_force(PlatformDynamicsParams(locked=UNLOCKED), q, tau), F)


def integrate(params, human, s, dt, n, t0=0.0):
    tau = np.array([1.0, -0.5, 0.1, 0.05, 0.0])
    for k in range(n):
        s = platform_step(params, s, human, tau, dt, t0 + k * dt)
    return s


def test_integrator_local_error_is_second_order():
    params = PlatformDynamicsParams(locked=UNLOCKED)
    human = HumanFootModel({"d1": [(0, 0), (1, 0.05)], "theta": [(0, 0), (1, 0.3)], "psi": [(0, 0), (1, 0.2)]})
    s0 = PlatformState.at(np.zeros(5))
    s0.q_dot = np.array([0.1, 0.0, 0.2, 0.0, 0.1])
    gaps = []
    for h in (0.004, 0.002, 0.001):
        two = integrate(params, human, s0.copy(), h / 2, 2)
        one = integrate(params, human, s0.copy(), h, 1)
        gaps.append(max(np.max(np.abs(two.q - one.q)), np.max(np.abs(two.q_dot - one.q_dot))))
    for big, small in zip(gaps, gaps[1:]):
        assert 3.5 < big / small < 4.5


def test_clamp_zeroes_only_offending_velocity():
    params = PlatformDynamicsParams(locked=UNLOCKED)
    human = HumanFootModel({"d1": [(0, 0.4)], "d2": [(0, 0.0), (1, 0.05)]})
    s = PlatformState.at([0.17, 0.0, 0.0, 0.0, 0.0])
    for k in range(300):
        s = platform_step(params, s, human, np.zeros(5), 0.001, k * 0.001)
        assert np.all(s.q >= params.chain.limits[:, 0]) and np.all(s.q <= params.chain.limits[:, 1])
    assert s.q[0] == 0.175
    assert s.q_dot[0] == 0.0
    assert s.q_dot[1] > 0.0


def test_locked_joints_do_not_move():
    params = PlatformDynamicsParams()
    human = HumanFootModel({"phi": [(0, 0.3)], "psi": [(0, -0.3)], "d2": [(0, 0.05)]})
    s = PlatformState.at(np.zeros(5))
    for k in range(200):
        s = platform_step(params, s, human, np.array([0, 0, 0, 5.0, 5.0]), 0.001, k * 0.001)
    assert s.q[3] == 0.0 and s.q[4] == 0.0
    assert s.q[1] > 0.0


def test_actuator_saturates_at_peak_values():
    params = PlatformDynamicsParams(joint_inertias=np.array([1.0, 1.0, 1.0, 1.0, 1.0]))
    human = HumanFootModel(stiffness=np.zeros(5), damping=np.zeros(5))
    s = platform_step(params, PlatformState.at(np.zeros(5)), human, np.array([-1000.0, 1000.0, -50.0, 0, 0]), 0.001)
    assert np.allclose(s.q_ddot[:3], [45.3, -45.3, 1.923])


def test_step_rejects_bad_dt_and_reports_faults():
    params = PlatformDynamicsParams()
    human = HumanFootModel()
    with pytest.raises(PlatformDomainError):
        platform_step(params, PlatformState.at(np.zeros(5)), human, np.zeros(5), 0.05)
    bad = PlatformState.at(np.zeros(5))
    bad.q_dot = np.array([math.nan, 0, 0, 0, 0])
    with pytest.raises(SimulationFault) as info:
        platform_step(params, bad, human, np.zeros(5), 0.001)
    assert "q_dot" in info.value.record


def test_ideal_mode_conservative_over_a_closed_foot_cycle():
    params = PlatformDynamicsParams.ideal()
    shift = lambda knots: [(t + 1.0, v) for t, v in knots]  # noqa: E731
    human = HumanFootModel(
        {
            "d1": shift([(0, 0), (1, 0.05), (2, 0.05), (3, 0), (4, 0)]),
            "d2": shift([(0, 0), (1, 0), (2, 0.04), (3, 0.04), (4, 0)]),
            "theta": shift([(0, 0), (1, 0.2), (2, 0.3), (3, 0.1), (4, 0)]),
        }
    )
    force = np.array([5.0, -3.0, 2.0])
    dt = 0.001
    s = PlatformState.at(np.zeros(5))
    tau = platform_inverse_dynamics(params, s, np.zeros(5), force)
    net = gross = 0.0
    for k in range(7000):
        s = platform_step(params, s, human, tau, dt, k * dt)
        if k * dt >= 1.0:  # settled before the cycle starts
            w = work_done_by_actuator(np.where(params.free_mask, tau, 0.0), s.q_dot, dt)
            net += w
            gross += abs(w)
        tau = platform_inverse_dynamics(params, s, np.zeros(5), force)
    assert gross > 0.5
    assert net <= 1e-3 * gross


def test_ideal_mode_no_work_on_a_held_foot():
    params = PlatformDynamicsParams.ideal()
    q0 = np.array([0.0, 0.02, 0.1, 0.0, 0.0])
    force = np.array([2.0, 1.0, -1.0])
    s = settle(params, HumanFootModel.holding(q0), q0, force, seconds=1.0)
    tau = platform_inverse_dynamics(params, s, np.zeros(5), force)
    work = 0.0
    for k in range(1000):
        s = platform_step(params, s, HumanFootModel.holding(q0), tau, 0.001, 1.0 + k * 0.001)
        work += work_done_by_actuator(np.where(params.free_mask, tau, 0.0), s.q_dot, 0.001)
    assert abs(work) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.tuples(*[st.floats(-5, 5)] * 3))
def test_determinism(force):
    params = PlatformDynamicsParams()
    human = HumanFootModel({"d1": [(0, 0), (0.2, 0.05)], "theta": [(0, 0), (0.2, -0.2)]})
    runs = []
    for _ in range(2):
        s = PlatformState.at(np.zeros(5))
        seq = []
        for k in range(200):
            tau = platform_inverse_dynamics(params, s, 0.5 * s.q_ddot, np.array(force))
            s = platform_step(params, s, human, tau, 0.001, k * 0.001)
            seq.append(np.concatenate([s.q, s.q_dot, s.tip_force]))
        runs.append(np.array(seq))
    assert np.array_equal(runs[0], runs[1])


def test_piecewise_reference_holds_ends_and_takes_right_slope():
    human = HumanFootModel({"d1": [(1.0, 0.0), (2.0, 0.1)]})
    q, qd = human.reference(0.5)
    assert q[0] == 0.0 and qd[0] == 0.0
    q, qd = human.reference(1.0)
    assert q[0] == 0.0 and math.isclose(qd[0], 0.1)
    q, qd = human.reference(1.5)
    assert math.isclose(q[0], 0.05) and math.isclose(qd[0], 0.1)
    q, qd = human.reference(3.0)
    assert q[0] == 0.1 and qd[0] == 0.0
