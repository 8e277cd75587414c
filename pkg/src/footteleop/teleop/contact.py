"""Virtual-wall contact between an end-effector point and a box-shaped object.

The object only translates. The normal force is a penalty spring plus a
penetration-rate damper that ramps in over the first ``damping_ramp`` of
depth, which keeps the force continuous at the surface. Tangential grip uses
a stick-slip spring anchored where contact began, capped by Coulomb friction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GraspObject:
    center: np.ndarray
    half_extents: np.ndarray
    wall_stiffness: float = 1.0e4
    wall_damping: float = 20.0
    mass: float = 0.3
    friction_coefficient: float = 0.5
    tangential_stiffness: float = 5.0e3
    tangential_damping: float = 20.0
    damping_ramp: float = 1.0e-3

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=float))
        if np.any(self.half_extents <= 0):
            raise ValueError("half extents must be positive")
        if not self.wall_stiffness > 0 or self.wall_damping < 0 or not self.mass > 0:
            raise ValueError("need wall_stiffness > 0, wall_damping >= 0, mass > 0")
        if self.friction_coefficient < 0 or self.tangential_stiffness < 0 or self.tangential_damping < 0:
            raise ValueError("friction parameters must be non-negative")


def penetration(x, obj: GraspObject, center=None) -> tuple[float, np.ndarray] | None:
    """Depth and outward normal of the least-penetrated face, or ``None`` outside."""
    c = obj.center if center is None else center
    r = np.asarray(x, dtype=float) - c
    depth = obj.half_extents - np.abs(r)
    if np.any(depth <= 0):
        return None
    i = int(np.argmin(depth))
    n = np.zeros(3)
    n[i] = 1.0 if r[i] >= 0 else -1.0
    return float(depth[i]), n


def normal_force(depth: float, depth_rate: float, obj: GraspObject) -> float:
    ramp = min(1.0, depth / obj.damping_ramp) if obj.damping_ramp > 0 else 1.0
    return obj.wall_stiffness * depth + obj.wall_damping * max(0.0, depth_rate) * ramp


def contact_force(x, x_dot, obj: GraspObject, center=None, center_velocity=None) -> np.ndarray:
    """Frictionless wall force on a point at ``x`` moving with ``x_dot``."""
    hit = penetration(x, obj, center)
    if hit is None:
        return np.zeros(3)
    depth, n = hit
    v_rel = np.asarray(x_dot, dtype=float)
    if center_velocity is not None:
        v_rel = v_rel - center_velocity
    return normal_force(depth, -float(v_rel @ n), obj) * n


@dataclass
class FrictionContact:
    """Contact state of one end-effector against the object (the stick anchor)."""

    anchor: np.ndarray | None = None  # in object coordinates
    normal_magnitude: float = 0.0
    in_contact: bool = False
    sliding: bool = False

    def force(self, x, x_dot, obj: GraspObject, center, center_velocity) -> np.ndarray:
        hit = penetration(x, obj, center)
        if hit is None:
            self.anchor = None
            self.normal_magnitude = 0.0
            self.in_contact = self.sliding = False
            return np.zeros(3)
        depth, n = hit
        r = np.asarray(x, dtype=float) - center
        v_rel = np.asarray(x_dot, dtype=float) - center_velocity
        fn = normal_force(depth, -float(v_rel @ n), obj)
        if self.anchor is None:
            self.anchor = r.copy()
        slip = r - self.anchor
        slip -= (slip @ n) * n
        v_t = v_rel - (v_rel @ n) * n
        ft = -obj.tangential_stiffness * slip - obj.tangential_damping * v_t
        cap = obj.friction_coefficient * fn
        ft_norm = float(np.linalg.norm(ft))
        self.sliding = ft_norm > cap
        if self.sliding:
            ft *= cap / ft_norm
            if obj.tangential_stiffness > 0:
                # drag the anchor so the spring alone carries the Coulomb force
                spring = -obj.tangential_stiffness * slip
                s_norm = float(np.linalg.norm(spring))
                if s_norm > cap:
                    self.anchor = self.anchor + slip * (1.0 - cap / s_norm)
        self.normal_magnitude = fn
        self.in_contact = True
        return fn * n + ft


@dataclass(frozen=True)
class TableSupport:
    """Horizontal support under the object, penalty contact plus viscous drag."""

    height: float = 0.0
    stiffness: float = 2.0e4
    damping: float = 50.0
    drag: float = 20.0

    def force(self, center, velocity, obj: GraspObject) -> np.ndarray:
        depth = self.height - (center[2] - obj.half_extents[2])
        if depth <= 0:
            return np.zeros(3)
        fz = self.stiffness * depth - self.damping * velocity[2]
        f = -self.drag * velocity
        f[2] = max(0.0, fz)
        return f


@dataclass
class ObjectState:
    x: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
