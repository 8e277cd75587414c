"""Kinematic model of the 5-DoF foot platform.

The chain uses Denavit-Hartenberg rows with extra fixed (starred) frames, so
the three Tait-Bryan angles of the pedal each get a row of their own. Each
row transform is ``Rz(beta) @ Tz(d) @ Rx(alpha) @ Tx(a)``.

Joint order everywhere is ``(d1, d2, theta, phi, psi)``: two prismatic joints
(forward/back ``d1``, lateral ``d2``) followed by pitch, roll and yaw of the
pedal. The matrix-product FK is the reference; :func:`closed_form_tip` is the
printed closed form kept as an independent cross-check.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

JOINT_NAMES = ("d1", "d2", "theta", "phi", "psi")
FRAME_NAMES = ("1", "2", "2*", "3", "4", "4*", "5", "6", "7")


class KinematicsDomainError(ValueError):
    """Raised for non-finite inputs, limit violations and bad sampling settings."""


class JointKind(enum.Enum):
    REVOLUTE_ON_BETA = "revolute"
    PRISMATIC_ON_D = "prismatic"
    FIXED = "fixed"


class LimitPolicy(enum.Enum):
    VALIDATE = "validate"
    CLAMP = "clamp"
    IGNORE = "ignore"


@dataclass(frozen=True)
class DhRow:
    beta_offset: float
    d_offset: float
    alpha: float
    a: float
    joint_kind: JointKind = JointKind.FIXED


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "RigidTransform":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3].copy(), T[:3, 3].copy())

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def orthonormality_error(self) -> float:
        """Largest deviation of the rotation from SO(3) (``R^T R - I`` and ``det - 1``)."""
        R = self.rotation
        return max(
            float(np.max(np.abs(R.T @ R - np.eye(3)))),
            abs(float(np.linalg.det(R)) - 1.0),
        )


# Geometric constants of the platform, metres.
DEFAULT_GEOMETRY: Mapping[str, float] = MappingProxyType(
    {
        "d2*": 0.170,
        "d3": 0.170,
        "a2*": 0.243,
        "a3": 0.046,
        "a4": 0.046,
        "d5": 0.040,
        "a6": 0.300,
    }
)

# (lower, upper) in SI units, joint order of JOINT_NAMES.
DEFAULT_LIMITS = np.array(
    [
        [-0.175, 0.175],
        [-0.1465, 0.1465],
        [math.radians(-80.0), math.radians(80.0)],
        [math.radians(-25.0), math.radians(45.0)],
        [math.radians(-45.0), math.radians(45.0)],
    ]
)
DEFAULT_LIMITS.setflags(write=False)


@dataclass(frozen=True)
class PlatformJoints:
    d1: float = 0.0
    d2: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    psi: float = 0.0

    @classmethod
    def from_array(cls, q: Sequence[float]) -> "PlatformJoints":
        q = np.asarray(q, dtype=float).reshape(5)
        return cls(*(float(v) for v in q))

    def as_array(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.theta, self.phi, self.psi])

    def violations(self, limits: np.ndarray = DEFAULT_LIMITS) -> list[str]:
        q = self.as_array()
        out = []
        for name, v, (lo, hi) in zip(JOINT_NAMES, q, limits):
            if not lo <= v <= hi:
                out.append(f"{name}={v:.6g} outside [{lo:.6g}, {hi:.6g}]")
        return out

    def validate(self, limits: np.ndarray = DEFAULT_LIMITS) -> "PlatformJoints":
        bad = self.violations(limits)
        if bad:
            raise KinematicsDomainError("joint limit violation: " + "; ".join(bad))
        return self

    def clamp(self, limits: np.ndarray = DEFAULT_LIMITS) -> "PlatformJoints":
        return PlatformJoints.from_array(np.clip(self.as_array(), limits[:, 0], limits[:, 1]))


@dataclass(frozen=True)
class KinematicChain:
    rows: tuple[DhRow, ...]
    geometry: Mapping[str, float]
    limits: np.ndarray = field(default_factory=lambda: DEFAULT_LIMITS)

    def __post_init__(self):
        kinds = [r.joint_kind for r in self.rows if r.joint_kind is not JointKind.FIXED]
        expected = [JointKind.PRISMATIC_ON_D] * 2 + [JointKind.REVOLUTE_ON_BETA] * 3
        if kinds != expected:
            raise KinematicsDomainError(f"chain must have joints {expected}, got {kinds}")
        object.__setattr__(self, "geometry", MappingProxyType(dict(self.geometry)))
        limits = np.array(self.limits, dtype=float).reshape(5, 2)
        limits.setflags(write=False)
        object.__setattr__(self, "limits", limits)

    @functools.cached_property
    def joint_rows(self) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.joint_kind is not JointKind.FIXED]

    @functools.cached_property
    def fixed_matrices(self) -> dict[int, np.ndarray]:
        return {
            i: _dh_matrix(r.beta_offset, r.d_offset, r.alpha, r.a)
            for i, r in enumerate(self.rows)
            if r.joint_kind is JointKind.FIXED
        }


def foot_platform_chain(
    geometry: Mapping[str, float] = DEFAULT_GEOMETRY,
    limits: np.ndarray = DEFAULT_LIMITS,
) -> KinematicChain:
    """Build the nine-row chain of the foot platform (frames 1, 2, 2*, 3, 4, 4*, 5, 6, 7)."""
    g = geometry
    hp = math.pi / 2
    P, R, F = JointKind.PRISMATIC_ON_D, JointKind.REVOLUTE_ON_BETA, JointKind.FIXED
    rows = (
        DhRow(0.0, 0.0, -hp, 0.0, F),
        DhRow(-hp, 0.0, -hp, 0.0, P),  # d1
        DhRow(0.0, 0.0, 0.0, 0.0, P),  # d2
        DhRow(0.0, g["d2*"], math.pi, g["a2*"], F),
        DhRow(0.0, g["d3"], -hp, -g["a3"], R),  # theta
        DhRow(0.0, 0.0, -hp, g["a4"], R),  # phi
        DhRow(hp, 0.0, hp, 0.0, F),
        DhRow(math.pi, g["d5"], 0.0, 0.0, R),  # psi
        DhRow(0.0, 0.0, 0.0, g["a6"], F),
    )
    return KinematicChain(rows, geometry, limits)


DEFAULT_CHAIN = foot_platform_chain()


def _check_finite(*values) -> None:
    for v in values:
        if not np.all(np.isfinite(v)):
            raise KinematicsDomainError(f"non-finite value: {v!r}")


def _dh_matrix(beta: float, d: float, alpha: float, a: float) -> np.ndarray:
    cb, sb = math.cos(beta), math.sin(beta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    # Rz(beta) Tz(d) Rx(alpha) Tx(a), expanded
    return np.array(
        [
            [cb, -sb * ca, sb * sa, a * cb],
            [sb, cb * ca, -cb * sa, a * sb],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def dh_transform(row: DhRow, joint_value: float = 0.0) -> RigidTransform:
    """Transform from frame i+1 to frame i for one row.

    The joint value adds to ``beta`` for revolute rows and to ``d`` for
    prismatic rows; fixed rows ignore it.
    """
    _check_finite(joint_value)
    beta, d = row.beta_offset, row.d_offset
    if row.joint_kind is JointKind.REVOLUTE_ON_BETA:
        beta += joint_value
    elif row.joint_kind is JointKind.PRISMATIC_ON_D:
        d += joint_value
    return RigidTransform.from_matrix(_dh_matrix(beta, d, row.alpha, row.a))


def _apply_policy(chain: KinematicChain, q, policy: LimitPolicy) -> np.ndarray:
    joints = q if isinstance(q, PlatformJoints) else PlatformJoints.from_array(q)
    _check_finite(joints.as_array())
    policy = LimitPolicy(policy)
    if policy is LimitPolicy.VALIDATE:
        joints.validate(chain.limits)
    elif policy is LimitPolicy.CLAMP:
        joints = joints.clamp(chain.limits)
    return joints.as_array()


def _row_matrices(chain: KinematicChain, qa: np.ndarray) -> list[np.ndarray]:
    mats = []
    fixed = chain.fixed_matrices
    j = 0
    for i, row in enumerate(chain.rows):
        if i in fixed:
            mats.append(fixed[i])
            continue
        beta, d = row.beta_offset, row.d_offset
        if row.joint_kind is JointKind.REVOLUTE_ON_BETA:
            beta += qa[j]
        else:
            d += qa[j]
        j += 1
        mats.append(_dh_matrix(beta, d, row.alpha, row.a))
    return mats


def forward_kinematics(
    chain: KinematicChain,
    q: PlatformJoints | Sequence[float],
    policy: LimitPolicy | str = LimitPolicy.VALIDATE,
) -> list[RigidTransform]:
    """Cumulative transforms from the base frame to every frame of the chain.

    Element ``k`` is the product of the first ``k + 1`` row transforms, so the
    last element is the pedal tip frame. ``policy`` selects what happens to
    out-of-limit joints: reject, clamp, or evaluate as given.
    """
    qa = _apply_policy(chain, q, policy)
    T = np.eye(4)
    out = []
    for M in _row_matrices(chain, qa):
        T = T @ M
        out.append(RigidTransform.from_matrix(T))
    return out


def tip_position(
    chain: KinematicChain,
    q: PlatformJoints | Sequence[float],
    policy: LimitPolicy | str = LimitPolicy.IGNORE,
) -> np.ndarray:
    """Pedal tip position from the matrix product (no intermediate frames kept)."""
    qa = _apply_policy(chain, q, policy)
    T = np.eye(4)
    for M in _row_matrices(chain, qa):
        T = T @ M
    return T[:3, 3].copy()


def _dh_matrices(beta, d, alpha: float, a: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    d = np.broadcast_to(np.asarray(d, dtype=float), beta.shape)
    cb, sb = np.cos(beta), np.sin(beta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    M = np.zeros(beta.shape + (4, 4))
    M[..., 0, 0] = cb
    M[..., 0, 1] = -sb * ca
    M[..., 0, 2] = sb * sa
    M[..., 0, 3] = a * cb
    M[..., 1, 0] = sb
    M[..., 1, 1] = cb * ca
    M[..., 1, 2] = -cb * sa
    M[..., 1, 3] = a * sb
    M[..., 2, 1] = sa
    M[..., 2, 2] = ca
    M[..., 2, 3] = d
    M[..., 3, 3] = 1.0
    return M


def tip_positions(chain: KinematicChain, Q: np.ndarray) -> np.ndarray:
    """Batched matrix-product tip positions for an ``(n, 5)`` joint array."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = len(Q)
    values = np.zeros((len(chain.rows), n))
    for j, i in enumerate(chain.joint_rows):
        values[i] = Q[:, j]
    T = np.broadcast_to(np.eye(4), (n, 4, 4))
    for row, v in zip(chain.rows, values):
        if row.joint_kind is JointKind.REVOLUTE_ON_BETA:
            M = _dh_matrices(row.beta_offset + v, row.d_offset, row.alpha, row.a)
        elif row.joint_kind is JointKind.PRISMATIC_ON_D:
            M = _dh_matrices(np.full(n, row.beta_offset), row.d_offset + v, row.alpha, row.a)
        else:
            M = _dh_matrix(row.beta_offset, row.d_offset, row.alpha, row.a)
        T = T @ M
    return T[:, :3, 3].copy()


def closed_form_tip(
    q: PlatformJoints | Sequence[float] | np.ndarray,
    geometry: Mapping[str, float] = DEFAULT_GEOMETRY,
) -> np.ndarray:
    """Closed-form tip position, transcribed term by term.

    ``q`` may be a single configuration or an ``(n, 5)`` array, in which case
    an ``(n, 3)`` array is returned. The transcription uses ``a3`` where the
    matrix product has ``a4`` and leaves out ``d2* - d3``; both are exact only
    while ``a3 == a4`` and ``d2* == d3``, which holds for the platform.
    """
    if isinstance(q, PlatformJoints):
        q = q.as_array()
    q = np.asarray(q, dtype=float)
    d1, d2, th, ph, ps = np.moveaxis(q, -1, 0)
    a2s, a3, d5, a6 = geometry["a2*"], geometry["a3"], geometry["d5"], geometry["a6"]
    st, ct = np.sin(th), np.cos(th)
    sf, cf = np.sin(ph), np.cos(ph)
    sp, cp = np.sin(ps), np.cos(ps)
    x = d2 + (d5 + a3) * sf - a6 * sp * cf
    y = d1 + d5 * cf * st + a6 * (ct * cp + sp * st * sf) + a3 * st * (cf - 1)
    z = a2s - a6 * (cp * st - ct * sf * sp) - a3 * ct + d5 * ct * cf + a3 * ct * cf
    return np.stack([x, y, z], axis=-1)


def translational_jacobian(
    q: PlatformJoints | Sequence[float],
    geometry: Mapping[str, float] = DEFAULT_GEOMETRY,
) -> np.ndarray:
    """3x5 Jacobian of the tip position w.r.t. ``(d1, d2, theta, phi, psi)``."""
    qa = q.as_array() if isinstance(q, PlatformJoints) else np.asarray(q, dtype=float)
    _check_finite(qa)
    _, _, th, ph, ps = qa
    a3, d5, a6 = geometry["a3"], geometry["d5"], geometry["a6"]
    st, ct = math.sin(th), math.cos(th)
    sf, cf = math.sin(ph), math.cos(ph)
    sp, cp = math.sin(ps), math.cos(ps)
    J = np.zeros((3, 5))
    J[1, 0] = 1.0
    J[0, 1] = 1.0
    # theta
    J[1, 2] = d5 * cf * ct + a6 * (-st * cp + sp * ct * sf) + a3 * ct * (cf - 1)
    J[2, 2] = -a6 * (cp * ct + st * sf * sp) + a3 * st - d5 * st * cf - a3 * st * cf
    # phi
    J[0, 3] = (d5 + a3) * cf + a6 * sp * sf
    J[1, 3] = -d5 * sf * st + a6 * sp * st * cf - a3 * st * sf
    J[2, 3] = a6 * ct * cf * sp - d5 * ct * sf - a3 * ct * sf
    # psi
    J[0, 4] = -a6 * cp * cf
    J[1, 4] = a6 * (-ct * sp + cp * st * sf)
    J[2, 4] = a6 * (sp * st + ct * sf * cp)
    return J


@dataclass
class WorkspaceEstimate:
    points: np.ndarray
    volume_m3: float
    rect_x_m: float
    rect_y_m: float
    voxel: float
    n_samples: int


_BATCH = 200_000


def _joint_samples(
    limits: np.ndarray,
    monte_carlo_n: int | None,
    samples_per_axis: int | None,
    seed: int,
) -> np.ndarray:
    lo, hi = limits[:, 0], limits[:, 1]
    if samples_per_axis is not None:
        if samples_per_axis < 1:
            raise KinematicsDomainError("samples_per_axis must be >= 1")
        axes = [np.linspace(l, h, samples_per_axis) for l, h in zip(lo, hi)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 5)
    if monte_carlo_n is None or monte_carlo_n < 1:
        raise KinematicsDomainError("need at least one workspace sample")
    rng = np.random.default_rng(seed)
    u = rng.random((monte_carlo_n, 5))
    return lo + u * (hi - lo)


def occupied_voxel_volume(points: np.ndarray, voxel: float) -> float:
    """Volume of the set of ``voxel``-sized cubes that contain at least one point."""
    if not voxel > 0:
        raise KinematicsDomainError(f"voxel must be > 0, got {voxel}")
    if len(points) == 0:
        raise KinematicsDomainError("no points to voxelise")
    cells = np.floor(points / voxel).astype(np.int64)
    return len(np.unique(cells, axis=0)) * voxel**3


def sample_workspace(
    chain: KinematicChain = DEFAULT_CHAIN,
    monte_carlo_n: int | None = 1_000_000,
    voxel: float = 0.005,
    samples_per_axis: int | None = None,
    seed: int = 0,
    freeze_rotations: bool = False,
    limits: np.ndarray | None = None,
) -> WorkspaceEstimate:
    """Sweep the tip over the joint-limit box and estimate the reachable volume.

    Joint samples come from a uniform Monte Carlo draw (``monte_carlo_n``) or a
    full grid (``samples_per_axis``, which wins when given). The volume is the
    occupied-voxel count times ``voxel**3``, so it depends on both settings.
    The XY rectangle is the tip extent over the prismatic box with all
    rotations at zero; the tip is affine in ``d1, d2`` there, so the corners
    give it exactly.
    """
    if not voxel > 0:
        raise KinematicsDomainError(f"voxel must be > 0, got {voxel}")
    limits = chain.limits if limits is None else np.asarray(limits, dtype=float)
    if freeze_rotations:
        limits = limits.copy()
        limits[2:] = 0.0
    q = _joint_samples(limits, monte_carlo_n, samples_per_axis, seed)
    points = np.concatenate(
        [tip_positions(chain, q[i : i + _BATCH]) for i in range(0, len(q), _BATCH)]
    )

    corners = []
    for d1 in limits[0]:
        for d2 in limits[1]:
            corners.append(tip_position(chain, [d1, d2, 0.0, 0.0, 0.0]))
    corners = np.array(corners)
    extent = corners.max(axis=0) - corners.min(axis=0)
    return WorkspaceEstimate(
        points=points,
        volume_m3=occupied_voxel_volume(points, voxel),
        rect_x_m=float(extent[0]),
        rect_y_m=float(extent[1]),
        voxel=voxel,
        n_samples=len(q),
    )
