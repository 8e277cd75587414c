"""Haptic master: joint-space dynamics of the foot platform and its force rendering.

Plant, with Coriolis, friction and actuator disturbance dropped::

    b qdd = tau_human - tau_u + g(q)

``g(q)`` is the static torque the actuator must supply to hold the
mechanism, expressed with the same sign as the actuator command, so that the
feedforward ``+g`` in :func:`platform_inverse_dynamics` cancels it.

A zero inertia vector selects the *ideal* mode: the plant becomes quasi-static
and the joint velocity follows from the human coupling balancing the
actuator, ``D (qd_ref - qd) + K (q_ref - q) = tau_u - g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .robot import SimulationFault, all_finite

ACTUATED_JOINTS = (0, 1, 2)
PULLEY_RADIUS = 0.00915  # m
PITCH_REDUCTION = 4.47
PEAK_FORCE = 45.3  # N, linear axes
PEAK_TORQUE = 1.923  # N m, pitch


class PlatformDomainError(ValueError):
    pass


@dataclass(frozen=True)
class PlatformDynamicsParams:
    """Constants of one foot platform.

    ``joint_inertias`` is the diagonal of ``b``; all zeros selects the ideal
    mode. ``gravity_bias`` and ``gravity_sine`` give
    ``g_i(q) = bias_i + sine_i * sin(q_i)``. ``transmission`` maps motor
    torque to joint effort (1/radius for the belt axes). ``locked`` joints are
    held by a mechanical lock, the passive roll and yaw in the 3-DoF build.
    ``inertia_compensation`` scales the one-step-delayed acceleration fed to
    the inertia term; feeding all of it back destabilises the human-platform
    loop (the third-order characteristic loses its s^2 term).
    """

    joint_inertias: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 0.05, 0.05, 0.05]))
    gravity_bias: np.ndarray = field(default_factory=lambda: np.zeros(5))
    gravity_sine: np.ndarray = field(default_factory=lambda: np.zeros(5))
    k_tau: float = 0.1
    transmission: np.ndarray = field(
        default_factory=lambda: np.array([1 / PULLEY_RADIUS, 1 / PULLEY_RADIUS, PITCH_REDUCTION, 1.0, 1.0])
    )
    torque_limits: np.ndarray = field(
        default_factory=lambda: np.array([PEAK_FORCE, PEAK_FORCE, PEAK_TORQUE, math.inf, math.inf])
    )
    locked: tuple[bool, ...] = (False, False, False, True, True)
    inertia_compensation: float = 0.5
    chain: kin.KinematicChain = kin.DEFAULT_CHAIN

    def __post_init__(self):
        b = np.asarray(self.joint_inertias, dtype=float)
        if not (np.all(b > 0) or np.all(b == 0)):
            raise PlatformDomainError("joint inertias must all be positive (or all zero for ideal mode)")
        if not self.k_tau > 0:
            raise PlatformDomainError("k_tau must be positive")
        if not 0.0 <= self.inertia_compensation <= 1.0:
            raise PlatformDomainError("inertia_compensation must lie in [0, 1]")

    @classmethod
    def ideal(cls, **kw) -> "PlatformDynamicsParams":
        return cls(joint_inertias=np.zeros(5), **kw)

    @property
    def is_ideal(self) -> bool:
        return bool(np.all(np.asarray(self.joint_inertias) == 0))

    def gravity_torque(self, q) -> np.ndarray:
        return np.asarray(self.gravity_bias) + np.asarray(self.gravity_sine) * np.sin(q)

    @property
    def free_mask(self) -> np.ndarray:
        return ~np.asarray(self.locked, dtype=bool)


@dataclass
class PlatformState:
    q: np.ndarray
    q_dot: np.ndarray = field(default_factory=lambda: np.zeros(5))
    q_ddot: np.ndarray = field(default_factory=lambda: np.zeros(5))
    tip_force: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def at(cls, q) -> "PlatformState":
        if isinstance(q, kin.PlatformJoints):
            q = q.as_array()
        return cls(np.asarray(q, dtype=float).copy())

    @property
    def joints(self) -> kin.PlatformJoints:
        return kin.PlatformJoints.from_array(self.q)

    def copy(self) -> "PlatformState":
        return PlatformState(self.q.copy(), self.q_dot.copy(), self.q_ddot.copy(), self.tip_force.copy())


def _piecewise_linear(knots: list[tuple[float, float]], t: float) -> tuple[float, float]:
    """Value and slope of a piecewise-linear knot list, held constant outside it.

    The slope is the right derivative, so a knot takes the slope of the
    segment that starts there.
    """
    if t < knots[0][0]:
        return knots[0][1], 0.0
    for (t0, v0), (t1, v1) in zip(knots, knots[1:]):
        if t < t1:
            slope = (v1 - v0) / (t1 - t0)
            return v0 + slope * (t - t0), slope
    return knots[-1][1], 0.0


@dataclass
class HumanFootModel:
    """PD coupling of the foot to a scripted joint trajectory.

    ``trajectory`` maps each joint name to a list of ``(t, value)`` knots;
    missing joints stay at zero.
    """

    trajectory: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    stiffness: np.ndarray = field(default_factory=lambda: np.array([2000.0, 2000.0, 50.0, 50.0, 50.0]))
    damping: np.ndarray = field(default_factory=lambda: np.array([100.0, 100.0, 2.0, 2.0, 2.0]))

    def __post_init__(self):
        if np.any(np.asarray(self.stiffness) < 0) or np.any(np.asarray(self.damping) < 0):
            raise PlatformDomainError("human stiffness and damping must be non-negative")
        for name, knots in self.trajectory.items():
            if name not in kin.JOINT_NAMES:
                raise PlatformDomainError(f"unknown joint {name!r} in trajectory")
            times = [t for t, _ in knots]
            if not knots or any(b <= a for a, b in zip(times, times[1:])):
                raise PlatformDomainError(f"knots for {name} must be non-empty with increasing times")

    @classmethod
    def holding(cls, q, **kw) -> "HumanFootModel":
        q = q.as_array() if isinstance(q, kin.PlatformJoints) else np.asarray(q, dtype=float)
        return cls({n: [(0.0, float(v))] for n, v in zip(kin.JOINT_NAMES, q)}, **kw)

    def reference(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        q = np.zeros(5)
        qd = np.zeros(5)
        for i, name in enumerate(kin.JOINT_NAMES):
            knots = self.trajectory.get(name)
            if knots:
                q[i], qd[i] = _piecewise_linear(knots, t)
        return q, qd

    def torque(self, t: float, q, q_dot) -> np.ndarray:
        q_ref, qd_ref = self.reference(t)
        return self.stiffness * (q_ref - q) + self.damping * (qd_ref - q_dot)


def platform_inverse_dynamics(
    params: PlatformDynamicsParams,
    state: PlatformState,
    q_ddot_est,
    reflected_force,
) -> np.ndarray:
    """Actuator command ``-b qdd + g(q) + J_p^T F`` for a force already mapped to the platform."""
    J = kin.translational_jacobian(state.q, params.chain.geometry)
    return (
        -np.asarray(params.joint_inertias) * np.asarray(q_ddot_est)
        + params.gravity_torque(state.q)
        + J.T @ np.asarray(reflected_force, dtype=float)
    )


def torque_to_current(params: PlatformDynamicsParams, tau: float, joint_index: int) -> float:
    """Motor current for a joint effort, through the joint's transmission."""
    if joint_index not in ACTUATED_JOINTS:
        raise PlatformDomainError(f"joint {joint_index} ({kin.JOINT_NAMES[joint_index]}) is passive")
    return tau / (params.k_tau * params.transmission[joint_index])


def current_to_torque(params: PlatformDynamicsParams, current: float, joint_index: int) -> float:
    if joint_index not in ACTUATED_JOINTS:
        raise PlatformDomainError(f"joint {joint_index} ({kin.JOINT_NAMES[joint_index]}) is passive")
    return current * params.k_tau * params.transmission[joint_index]


def measured_tip_force(params: PlatformDynamicsParams, q, human_torque) -> np.ndarray:
    """Cartesian foot force whose joint image best matches ``human_torque`` on the free joints."""
    free = params.free_mask
    J = kin.translational_jacobian(q, params.chain.geometry)[:, free]
    tau = np.asarray(human_torque)[free]
    if J.shape == (3, 3):
        return np.linalg.solve(J.T, tau)
    return np.linalg.lstsq(J.T, tau, rcond=None)[0]


def platform_step(
    params: PlatformDynamicsParams,
    state: PlatformState,
    human: HumanFootModel,
    actuator_torque,
    dt: float,
    t: float = 0.0,
) -> PlatformState:
    """Advance the platform by ``dt`` (semi-implicit Euler), human input evaluated at ``t``.

    Actuator effort is saturated at ``torque_limits`` and removed from locked
    joints. Joints leaving their limits are clamped and only the offending
    velocity component is zeroed.
    """
    if not 0 < dt <= 0.01:
        raise PlatformDomainError(f"dt must be in (0, 0.01], got {dt}")
    free = params.free_mask
    tau_u = np.clip(np.asarray(actuator_torque, dtype=float), -params.torque_limits, params.torque_limits)
    tau_u = np.where(free, tau_u, 0.0)
    g = params.gravity_torque(state.q)
    tau_h = human.torque(t, state.q, state.q_dot)

    if params.is_ideal:
        q_ref, qd_ref = human.reference(t)
        D = np.asarray(human.damping, dtype=float)
        if np.any(D[free] <= 0):
            raise PlatformDomainError("ideal mode needs positive human damping on free joints")
        K = np.asarray(human.stiffness, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            q_dot = np.where(free, qd_ref + (K * (q_ref - state.q) - tau_u + g) / D, 0.0)
        q_ddot = (q_dot - state.q_dot) / dt
    else:
        q_ddot = np.where(free, (tau_h - tau_u + g) / params.joint_inertias, 0.0)
        q_dot = state.q_dot + dt * q_ddot
    q = state.q + dt * q_dot

    lo, hi = params.chain.limits[:, 0], params.chain.limits[:, 1]
    hit = (q < lo) | (q > hi)
    if np.any(hit):
        q = np.clip(q, lo, hi)
        q_dot = np.where(hit, 0.0, q_dot)

    if not all_finite(q, q_dot, q_ddot):
        raise SimulationFault(
            "platform state became non-finite",
            {"t": t, "q": state.q.tolist(), "q_dot": state.q_dot.tolist(), "tau_u": tau_u.tolist()},
        )
    tau_h_new = human.torque(t + dt, q, q_dot)
    return PlatformState(q, q_dot, q_ddot, measured_tip_force(params, q, tau_h_new))


def work_done_by_actuator(tau_u, q_dot, dt: float) -> float:
    """Energy the actuator puts into the mechanism over one step."""
    return float(-np.asarray(tau_u) @ np.asarray(q_dot)) * dt

