"""Bilateral position-force teleoperation loop for two foot platforms and two arms.

Per step, sides stepped in the fixed order left then right:

1. platform dynamics under the human coupling and last actuator command;
2. pedal tip by forward kinematics, mirrored for a mirrored platform, sent
   through the forward channel; attractor = ``upsilon @ tip``;
3. contact forces at the current arm and object states; DS + variable
   damping impedance force; arm step; object step;
4. force the arm applies on the environment mapped through ``omega`` (and the
   mirror), sent back, turned into the next actuator command.

Arm positions live in each arm's base frame, which is a pure translation of
the world frame (``SideConfig.base``); the object and its contacts live in
the world frame.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kinematics as kin
from ..platform import (
    HumanFootModel,
    PlatformDynamicsParams,
    PlatformState,
    platform_inverse_dynamics,
    platform_step,
)
from ..robot import ArmState, ImpedanceController, SimulationFault, all_finite, arm_step
from .channel import ChannelConfig, DelayLine
from .contact import FrictionContact, GraspObject, ObjectState, TableSupport

PHASE_LABELS = ("a_idle", "b_retrieve", "c_grasp_lift", "d_work", "e_disturb", "f_retreat")
PHASE_GROUPS = {
    "free": ("a_idle", "b_retrieve", "f_retreat"),
    "contact": ("c_grasp_lift", "d_work", "e_disturb"),
}
MIRROR = np.array([-1.0, 1.0, 1.0])

PLATFORM_COLUMNS = ("q_d1", "q_d2", "q_theta", "q_phi", "q_psi", "fx", "fy", "fz", "fdx", "fdy", "fdz")
ARM_COLUMNS = (
    "x", "y", "z", "vx", "vy", "vz",
    "fux", "fuy", "fuz", "fex", "fey", "fez",
    "ax", "ay", "az",
)  # fmt: skip
OBJECT_COLUMNS = ("obj_x", "obj_y", "obj_z")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioPhase:
    label: str
    start: float
    end: float


def validate_phases(phases: list[ScenarioPhase]) -> None:
    if not phases:
        raise ScenarioError("at least one phase is required")
    order = [PHASE_LABELS.index(p.label) if p.label in PHASE_LABELS else -1 for p in phases]
    if -1 in order:
        raise ScenarioError(f"phase labels must be among {PHASE_LABELS}")
    if any(b <= a for a, b in zip(order, order[1:])):
        raise ScenarioError("phases must be ordered a -> f without repeats")
    for p in phases:
        if not p.end > p.start:
            raise ScenarioError(f"phase {p.label} has end <= start")
    for p, nxt in zip(phases, phases[1:]):
        if not math.isclose(p.end, nxt.start, abs_tol=1e-12):
            raise ScenarioError(f"phases {p.label} and {nxt.label} are not contiguous")


def phase_at(phases: list[ScenarioPhase], t: float) -> str:
    for p in phases:
        if p.start <= t < p.end:
            return p.label
    return phases[-1].label if t >= phases[-1].end else phases[0].label


@dataclass(frozen=True)
class TelefunctioningPair:
    upsilon: np.ndarray = field(default_factory=lambda: 5.0 * np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 0.2]))

    def __post_init__(self):
        for name in ("upsilon", "omega"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (3, 3) or not np.all(np.isfinite(m)):
                raise ScenarioError(f"{name} must be a finite 3x3 matrix")
            object.__setattr__(self, name, m)


@dataclass(frozen=True)
class ImpulseTrain:
    """Rectangular force pulses applied to the object."""

    times: tuple[float, ...] = ()
    magnitude: float = 20.0
    duration: float = 0.05
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))

    def force(self, t: float) -> np.ndarray:
        active = sum(1 for t0 in self.times if t0 <= t < t0 + self.duration)
        d = np.asarray(self.direction, dtype=float)
        return active * self.magnitude * d / np.linalg.norm(d)


@dataclass
class SideConfig:
    name: str
    human: HumanFootModel
    base: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mirror: bool = False


@dataclass
class ScenarioConfig:
    sides: list[SideConfig]
    phases: list[ScenarioPhase]
    dt: float = 0.001
    duration: float = 60.0
    telefunctioning: TelefunctioningPair = field(default_factory=TelefunctioningPair)
    channel_delay: float = 0.0
    platform: PlatformDynamicsParams = field(default_factory=PlatformDynamicsParams)
    controller: ImpedanceController = field(default_factory=ImpedanceController)
    obj: GraspObject | None = None
    table: TableSupport | None = None
    disturbance: ImpulseTrain | None = None
    record_every: int = 1

    def validate(self) -> None:
        if not 0 < self.dt <= 0.01:
            raise ScenarioError("dt must be in (0, 0.01]")
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if self.record_every < 1:
            raise ScenarioError("record_every must be >= 1")
        names = [s.name for s in self.sides]
        if not names or len(set(names)) != len(names):
            raise ScenarioError("sides need unique names")
        validate_phases(self.phases)
        if self.phases[0].start > 0 or self.phases[-1].end < self.duration - 1e-9:
            raise ScenarioError("phases must cover [0, duration]")
        if self.table is not None and self.obj is None:
            raise ScenarioError("a table needs an object")


def trace_columns(side_names) -> list[str]:
    cols = ["t"]
    for name in side_names:
        cols += [f"{name}_{c}" for c in PLATFORM_COLUMNS + ARM_COLUMNS]
    return cols + list(OBJECT_COLUMNS)


@dataclass
class SimTrace:
    columns: list[str]
    data: np.ndarray
    phases: list[str]
    fault: dict | None = None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def side_block(self, side: str, names) -> np.ndarray:
        return np.column_stack([self.column(f"{side}_{n}") for n in names])

    @property
    def side_names(self) -> list[str]:
        return [c[: -len("_q_d1")] for c in self.columns if c.endswith("_q_d1")]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns + ["phase"]) + "\n")
        for row, label in zip(self.data, self.phases):
            buf.write(",".join(map(repr, row.tolist())) + "," + label + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="ascii")

    @classmethod
    def read_csv(cls, path) -> "SimTrace":
        with open(path, newline="", encoding="ascii") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows, labels = [], []
            for row in reader:
                rows.append([float(v) for v in row[:-1]])
                labels.append(row[-1])
        data = np.array(rows, dtype=float).reshape(len(rows), len(header) - 1)
        return cls(header[:-1], data, labels)


@dataclass
class _Side:
    cfg: SideConfig
    platform: PlatformState
    arm: ArmState
    tau_u: np.ndarray
    forward: DelayLine
    backward: DelayLine
    friction: FrictionContact = field(default_factory=FrictionContact)
    basis: np.ndarray | None = None
    attractor: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fu: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fd: np.ndarray = field(default_factory=lambda: np.zeros(3))


def _pedal_position(chain, q, mirror: bool) -> np.ndarray:
    tip = kin.tip_position(chain, q, kin.LimitPolicy.IGNORE)
    return tip * MIRROR if mirror else tip


def run_scenario(cfg: ScenarioConfig) -> SimTrace:
    """Run the fixed-step loop and return the trace (truncated, with ``fault`` set, on failure)."""
    cfg.validate()
    dt = cfg.dt
    n_steps = int(round(cfg.duration / dt))
    params = cfg.platform
    chain = params.chain
    ctrl = cfg.controller
    upsilon, omega = cfg.telefunctioning.upsilon, cfg.telefunctioning.omega
    channel = ChannelConfig(cfg.channel_delay, dt)

    sides = []
    for sc in cfg.sides:
        q0 = np.clip(sc.human.reference(0.0)[0], chain.limits[:, 0], chain.limits[:, 1])
        pstate = PlatformState.at(q0)
        x0 = upsilon @ _pedal_position(chain, q0, sc.mirror)
        arm = ArmState(x0.copy(), R=np.array(ctrl.R_d, dtype=float))
        tau0 = platform_inverse_dynamics(params, pstate, np.zeros(5), np.zeros(3))
        sides.append(_Side(sc, pstate, arm, tau0, DelayLine(channel), DelayLine(channel), attractor=x0))

    obj = None
    if cfg.obj is not None:
        obj = ObjectState(cfg.obj.center.copy())
    gravity = np.asarray(ctrl.params.gravity, dtype=float)

    columns = trace_columns([s.cfg.name for s in sides])
    rows: list[list[float]] = []
    labels: list[str] = []
    fault = None
    for k in range(n_steps):
        t = k * dt
        try:
            for s in sides:
                s.platform = platform_step(params, s.platform, s.cfg.human, s.tau_u, dt, t)
            for s in sides:
                tip = _pedal_position(chain, s.platform.q, s.cfg.mirror)
                s.attractor = upsilon @ s.forward(tip)

            for s in sides:
                if obj is None:
                    s.fc = np.zeros(3)
                else:
                    s.fc = s.friction.force(s.cfg.base + s.arm.x, s.arm.x_dot, cfg.obj, obj.x, obj.v)
            for s in sides:
                s.fu, torque, s.basis = ctrl.compute(s.arm, s.attractor, s.basis)
                s.arm = arm_step(s.arm, ctrl.params, s.fu, s.fc, torque, dt)
            if obj is not None:
                f_obj = cfg.obj.mass * gravity - sum(s.fc for s in sides)
                if cfg.table is not None:
                    f_obj = f_obj + cfg.table.force(obj.x, obj.v, cfg.obj)
                if cfg.disturbance is not None:
                    f_obj = f_obj + cfg.disturbance.force(t)
                v = obj.v + dt * f_obj / cfg.obj.mass
                obj = ObjectState(obj.x + dt * v, v)
                if not all_finite(obj.x, obj.v):
                    raise SimulationFault("object state became non-finite", {"t": t})

            for s in sides:
                s.fd = omega @ (-s.fc)
                if s.cfg.mirror:
                    s.fd = s.fd * MIRROR
                qdd_est = params.inertia_compensation * s.platform.q_ddot
                s.tau_u = platform_inverse_dynamics(params, s.platform, qdd_est, s.backward(s.fd))
        except SimulationFault as exc:
            fault = {"t": t, "message": str(exc), **exc.record}
            break

        if (k + 1) % cfg.record_every:
            continue
        t_next = round((k + 1) * dt, 12)  # clean timestamps in the trace
        row = [t_next]
        for s in sides:
            row += s.platform.q.tolist() + s.platform.tip_force.tolist() + s.fd.tolist()
            row += s.arm.x.tolist() + s.arm.x_dot.tolist() + s.fu.tolist() + s.fc.tolist()
            row += s.attractor.tolist()
        row += obj.x.tolist() if obj is not None else [math.nan] * 3
        rows.append(row)
        labels.append(phase_at(cfg.phases, t_next))

    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return SimTrace(columns, data, labels, fault)
