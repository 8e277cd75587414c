"""Telemanipulator side: DS attractor, variable-damping impedance, orientation PD.

The arm is an isotropic Cartesian point mass with isotropic rotational
inertia, so the Cartesian dynamics reduce to ``m xdd + G = Fu + Fext`` with
Coriolis terms identically zero. Angular velocity is expressed in the base
frame and orientation is integrated as ``R <- exp(omega dt) R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

DIRECTION_EPS = 1e-6  # m/s; below this the DS direction is treated as undefined
PI_EPS = 1e-9


class SimulationFault(RuntimeError):
    """A state went non-finite during integration."""

    def __init__(self, message: str, record: dict | None = None):
        super().__init__(message)
        self.record = record or {}


@dataclass(frozen=True)
class ArmDynamicsParams:
    mass: float = 3.0
    rotational_inertia: float = 0.1
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        if not (self.mass > 0 and self.rotational_inertia > 0):
            raise ValueError("mass and rotational inertia must be positive")

    def gravity_compensation(self) -> np.ndarray:
        """G(x): the force that holds the mass against gravity."""
        return -self.mass * np.asarray(self.gravity, dtype=float)


@dataclass(frozen=True)
class DampingSpec:
    lambda1: float = 60.0
    lambda2: float = 90.0
    lambda3: float = 90.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) <= 0:
            raise ValueError("damping eigenvalues must be strictly positive")

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])


@dataclass
class ArmState:
    x: np.ndarray
    x_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "ArmState":
        return ArmState(self.x.copy(), self.x_dot.copy(), self.R.copy(), self.omega.copy())


def ds_desired_velocity(x_platform, x_robot, upsilon) -> np.ndarray:
    """Linear DS with attractor ``upsilon @ x_platform``."""
    return np.asarray(upsilon, dtype=float) @ np.asarray(x_platform, dtype=float) - np.asarray(
        x_robot, dtype=float
    )


def damping_basis(direction, previous_basis: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal basis whose first column is ``direction`` normalised.

    When the direction is shorter than ``DIRECTION_EPS`` the previous basis is
    returned unchanged (identity if there is none). The second column is
    taken from the previous basis where possible so the frame does not spin
    about the task direction from one step to the next.
    """
    v = np.asarray(direction, dtype=float)
    n = float(np.linalg.norm(v))
    if n < DIRECTION_EPS:
        return np.eye(3) if previous_basis is None else np.asarray(previous_basis, dtype=float)
    e1 = v / n
    candidates = []
    if previous_basis is not None:
        candidates += [previous_basis[:, 1], previous_basis[:, 2]]
    candidates.append(np.eye(3)[int(np.argmin(np.abs(e1)))])
    for helper in candidates:
        w = helper - (helper @ e1) * e1
        wn = float(np.linalg.norm(w))
        if wn > 1e-3:
            break
    e2 = w / wn
    e3 = np.cross(e1, e2)
    return np.column_stack([e1, e2, e3])


def damping_matrix(
    desired_velocity, spec: DampingSpec, previous_basis: np.ndarray | None = None
) -> np.ndarray:
    """``Q diag(l1, l2, l3) Q^T`` with the first eigenvector along the desired velocity."""
    Q = damping_basis(desired_velocity, previous_basis)
    D = (Q * spec.eigenvalues) @ Q.T
    return 0.5 * (D + D.T)


def impedance_control_force(D, desired_velocity, velocity, params: ArmDynamicsParams) -> np.ndarray:
    return np.asarray(D) @ (np.asarray(desired_velocity) - np.asarray(velocity)) + (
        params.gravity_compensation()
    )


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def rotation_exp(rotvec) -> np.ndarray:
    """Rodrigues' formula."""
    w = np.asarray(rotvec, dtype=float)
    angle = float(np.linalg.norm(w))
    if angle < 1e-12:
        return np.eye(3) + _skew(w)
    K = _skew(w / angle)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def rotation_log(R) -> np.ndarray:
    """Axis-angle vector of a rotation matrix, angle in ``[0, pi]``.

    At (numerically) ``pi`` the axis sign is fixed so that its
    largest-magnitude component is positive.
    """
    R = np.asarray(R, dtype=float)
    vee = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin2 = float(np.linalg.norm(vee))  # 2 sin(angle)
    cos2 = float(np.trace(R)) - 1.0  # 2 cos(angle)
    angle = math.atan2(sin2, cos2)
    if angle < 1e-6:
        # angle / sin(angle) ~ 1 + angle^2 / 6
        return 0.5 * vee * (1.0 + angle * angle / 6.0)
    if math.pi - angle > 1e-4:
        return vee * (angle / sin2)
    cos_angle = 0.5 * cos2
    # near pi the symmetric part is cos(a) I + (1 - cos(a)) u u^T
    B = (0.5 * (R + R.T) - cos_angle * np.eye(3)) / (1.0 - cos_angle)
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / math.sqrt(B[k, k])
    axis /= np.linalg.norm(axis)
    if math.pi - angle > PI_EPS:
        if axis @ vee < 0:
            axis = -axis
    elif axis[int(np.argmax(np.abs(axis)))] < 0:
        axis = -axis
    return axis * angle


def orientation_error(R, R_d) -> np.ndarray:
    """Axis-angle of ``R_d R^T``: the base-frame rotation taking ``R`` onto ``R_d``."""
    return rotation_log(np.asarray(R_d) @ np.asarray(R).T)


def orientation_pd_torque(err, omega, kp: float, kd: float) -> np.ndarray:
    if kp < 0 or kd < 0:
        raise ValueError("PD gains must be non-negative")
    return kp * np.asarray(err, dtype=float) - kd * np.asarray(omega, dtype=float)


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """One Newton step towards the polar factor; squares the departure from SO(3)."""
    return 1.5 * R - 0.5 * (R @ R.T @ R)


def all_finite(*arrays) -> bool:
    # a NaN or inf anywhere poisons the sum
    return math.isfinite(sum(float(np.sum(a)) for a in arrays))


def arm_step(
    state: ArmState,
    params: ArmDynamicsParams,
    control_force,
    external_force,
    orientation_torque,
    dt: float,
) -> ArmState:
    """Semi-implicit Euler step of ``m xdd = Fu + Fext + m g``."""
    if not 0 < dt <= 0.01:
        raise ValueError(f"dt must be in (0, 0.01], got {dt}")
    acc = (np.asarray(control_force) + np.asarray(external_force)) / params.mass + params.gravity
    x_dot = state.x_dot + dt * acc
    x = state.x + dt * x_dot
    omega = state.omega + dt * np.asarray(orientation_torque) / params.rotational_inertia
    R = orthonormalize(rotation_exp(omega * dt) @ state.R)
    new = ArmState(x, x_dot, R, omega)
    if not all_finite(x, x_dot, R, omega):
        raise SimulationFault("arm state became non-finite", {"state": state, "dt": dt})
    return new


@dataclass(frozen=True)
class ImpedanceController:
    """Bundles the per-step control law for one arm.

    Holds the damping eigenvalues, orientation gains and the fixed desired
    orientation. :meth:`compute` returns the translational force, the
    orientation torque and the eigenbasis to carry to the next step.
    """

    damping: DampingSpec = DampingSpec()
    params: ArmDynamicsParams = ArmDynamicsParams()
    kp: float = 25.0
    kd: float = 10.0
    R_d: np.ndarray = field(default_factory=lambda: np.eye(3))

    def compute(self, state: ArmState, attractor, basis: np.ndarray | None):
        xd_dot = np.asarray(attractor) - state.x
        Q = damping_basis(xd_dot, basis)
        D = (Q * self.damping.eigenvalues) @ Q.T
        D = 0.5 * (D + D.T)
        force = impedance_control_force(D, xd_dot, state.x_dot, self.params)
        torque = orientation_pd_torque(orientation_error(state.R, self.R_d), state.omega, self.kp, self.kd)
        return force, torque, Q

    def with_damping(self, **kw) -> "ImpedanceController":
        return replace(self, damping=replace(self.damping, **kw))
