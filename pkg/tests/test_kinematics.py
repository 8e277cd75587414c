import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from footteleop import kinematics as kin
from footteleop.kinematics import (
    DEFAULT_CHAIN,
    DEFAULT_LIMITS,
    DhRow,
    JointKind,
    KinematicsDomainError,
    LimitPolicy,
    PlatformJoints,
    closed_form_tip,
    dh_transform,
    forward_kinematics,
    sample_workspace,
    tip_position,
    translational_jacobian,
)


def Rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def random_joints(rng, n):
    lo, hi = DEFAULT_LIMITS[:, 0], DEFAULT_LIMITS[:, 1]
    return lo + rng.random((n, 5)) * (hi - lo)


in_limit_joints = st.tuples(
    *(st.floats(float(lo), float(hi), allow_nan=False) for lo, hi in DEFAULT_LIMITS)
).map(np.array)


def test_identity_row():
    row = DhRow(0.0, 0.0, 0.0, 0.0, JointKind.FIXED)
    for value in (0.0, 1.7, -3.0):
        T = dh_transform(row, value)
        assert np.array_equal(T.matrix, np.eye(4))


def test_first_row_is_rx_minus_half_pi():
    T = dh_transform(DEFAULT_CHAIN.rows[0], 0.0)
    assert np.allclose(T.rotation, Rx(-math.pi / 2), atol=1e-15)
    assert np.allclose(T.translation, 0.0, atol=1e-15)


def test_pitch_row_at_zero():
    row = DEFAULT_CHAIN.rows[4]
    assert row.joint_kind is JointKind.REVOLUTE_ON_BETA
    T = dh_transform(row, 0.0)
    assert np.allclose(T.rotation, Rx(-math.pi / 2), atol=1e-15)
    assert np.allclose(T.translation, [-0.046, 0.0, 0.170], atol=1e-15)


def test_pitch_row_rotates_offset_with_theta():
    th = 0.3
    T = dh_transform(DEFAULT_CHAIN.rows[4], th)
    assert np.allclose(T.translation, [-0.046 * math.cos(th), -0.046 * math.sin(th), 0.170], atol=1e-15)


def test_dh_transform_rejects_non_finite():
    with pytest.raises(KinematicsDomainError):
        dh_transform(DEFAULT_CHAIN.rows[1], math.nan)


def test_chain_structure():
    kinds = [r.joint_kind for r in DEFAULT_CHAIN.rows]
    assert len(kinds) == 9
    assert [k for k in kinds if k is not JointKind.FIXED] == [
        JointKind.PRISMATIC_ON_D,
        JointKind.PRISMATIC_ON_D,
        JointKind.REVOLUTE_ON_BETA,
        JointKind.REVOLUTE_ON_BETA,
        JointKind.REVOLUTE_ON_BETA,
    ]
    for r in DEFAULT_CHAIN.rows:
        assert any(math.isclose(r.alpha, v, abs_tol=1e-15) for v in (0, math.pi / 2, -math.pi / 2, math.pi))


def test_geometry_is_immutable():
    with pytest.raises(TypeError):
        DEFAULT_CHAIN.geometry["a6"] = 1.0
    with pytest.raises(ValueError):
        DEFAULT_CHAIN.limits[0, 0] = 0.0


def test_chain_rejects_wrong_joint_order():
    rows = list(DEFAULT_CHAIN.rows)
    rows[1], rows[4] = rows[4], rows[1]
    with pytest.raises(KinematicsDomainError):
        kin.KinematicChain(tuple(rows), DEFAULT_CHAIN.geometry)


def test_fk_at_zero():
    frames = forward_kinematics(DEFAULT_CHAIN, PlatformJoints())
    assert len(frames) == 9
    assert np.allclose(frames[-1].translation, [0.0, 0.300, 0.283], atol=1e-12)


def test_fk_prismatic_example():
    tip = forward_kinematics(DEFAULT_CHAIN, [0.1, 0.05, 0, 0, 0])[-1].translation
    assert np.allclose(tip, [0.05, 0.400, 0.283], atol=1e-12)


def test_fk_frames_are_cumulative_products():
    q = [0.02, -0.05, 0.4, 0.2, -0.3]
    frames = forward_kinematics(DEFAULT_CHAIN, q)
    T = np.eye(4)
    values = iter(q)
    for row, frame in zip(DEFAULT_CHAIN.rows, frames):
        v = 0.0 if row.joint_kind is JointKind.FIXED else next(values)
        T = T @ dh_transform(row, v).matrix
        assert np.allclose(frame.matrix, T, atol=1e-15)


def test_fk_matches_closed_form_on_1000_samples():
    rng = np.random.default_rng(1)
    Q = random_joints(rng, 1000)
    worst = 0.0
    for q in Q:
        worst = max(worst, float(np.max(np.abs(tip_position(DEFAULT_CHAIN, q) - closed_form_tip(q)))))
    assert worst <= 1e-9


def test_batched_tips_match_single():
    rng = np.random.default_rng(2)
    Q = random_joints(rng, 50)
    batch = kin.tip_positions(DEFAULT_CHAIN, Q)
    single = np.array([tip_position(DEFAULT_CHAIN, q) for q in Q])
    assert np.allclose(batch, single, atol=1e-14)
    assert np.allclose(closed_form_tip(Q), single, atol=1e-9)


def test_closed_form_transcription_only_differs_off_platform_geometry():
    # the closed form uses a3 in place of a4 and drops d2* - d3; perturbing
    # either constant exposes the difference, the matrix product stays exact
    q = [0.01, 0.02, 0.5, 0.3, 0.2]
    g = dict(kin.DEFAULT_GEOMETRY)
    g["a4"] = 0.060
    chain = kin.foot_platform_chain(g)
    assert np.max(np.abs(tip_position(chain, q) - closed_form_tip(q, g))) > 1e-3
    g = dict(kin.DEFAULT_GEOMETRY)
    g["d3"] = 0.150
    chain = kin.foot_platform_chain(g)
    diff = tip_position(chain, q) - closed_form_tip(q, g)
    assert np.isclose(np.linalg.norm(diff), 0.020, atol=1e-12)


def test_closed_form_yaw_example():
    tip = closed_form_tip([0, 0, 0, 0, math.radians(45)])
    r = 0.300 * math.sqrt(0.5)
    assert np.allclose(tip, [-r, r, 0.283], atol=1e-12)
    assert np.allclose(tip, [-0.2121, 0.2121, 0.283], atol=5e-5)


def test_limit_corners_are_finite_and_regular():
    for corner in itertools.product(*DEFAULT_LIMITS):
        tip = closed_form_tip(corner)
        assert np.all(np.isfinite(tip))
        J = translational_jacobian(corner)
        # the three actuated joints keep full rank everywhere in the box
        assert np.linalg.matrix_rank(J[:, :3]) == 3


def test_jacobian_at_zero():
    J = translational_jacobian(np.zeros(5))
    assert np.allclose(J[:, 0], [0, 1, 0])
    assert np.allclose(J[:, 1], [1, 0, 0])
    assert np.allclose(J[:, 4], [-0.300, 0, 0], atol=1e-15)


def central_difference(f, q, h=1e-6):
    J = np.zeros((3, 5))
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        J[:, j] = (f(q + e) - f(q - e)) / (2 * h)
    return J


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for q in random_joints(rng, 100):
        fd = central_difference(closed_form_tip, q)
        worst = max(worst, float(np.max(np.abs(translational_jacobian(q) - fd))))
        # the matrix-product FK has the same derivative
        fd_chain = central_difference(lambda x: tip_position(DEFAULT_CHAIN, x), q)
        assert np.max(np.abs(translational_jacobian(q) - fd_chain)) <= 1e-6
    assert worst <= 1e-6


def test_limit_policies():
    q = [0.3, 0, 0, 0, math.radians(200)]
    with pytest.raises(KinematicsDomainError, match="d1"):
        forward_kinematics(DEFAULT_CHAIN, q, LimitPolicy.VALIDATE)
    clamped = forward_kinematics(DEFAULT_CHAIN, q, LimitPolicy.CLAMP)[-1].translation
    expected = closed_form_tip([0.175, 0, 0, 0, math.radians(45)])
    assert np.allclose(clamped, expected, atol=1e-12)
    raw = forward_kinematics(DEFAULT_CHAIN, q, LimitPolicy.IGNORE)[-1].translation
    assert np.allclose(raw, closed_form_tip(q), atol=1e-12)


def test_platform_joints_validate_and_clamp():
    j = PlatformJoints(0.2, 0.0, 0.0, math.radians(-30), 0.0)
    assert len(j.violations()) == 2
    c = j.clamp()
    assert c.d1 == 0.175
    assert math.isclose(c.phi, math.radians(-25))
    assert c.validate() is c


@settings(max_examples=200, deadline=None)
@given(in_limit_joints)
def test_fk_frames_stay_rigid(q):
    for frame in forward_kinematics(DEFAULT_CHAIN, q):
        assert frame.orthonormality_error() <= 1e-10
    for row, v in zip(DEFAULT_CHAIN.rows, [0, *q[:2], 0, *q[2:4], 0, q[4], 0]):
        assert dh_transform(row, v).orthonormality_error() <= 1e-12


@settings(max_examples=200, deadline=None)
@given(in_limit_joints, st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_prismatic_joints_translate_the_tip(q, dd1, dd2):
    base = tip_position(DEFAULT_CHAIN, q)
    moved = tip_position(DEFAULT_CHAIN, q + np.array([dd1, dd2, 0, 0, 0]))
    assert np.allclose(moved - base, [dd2, dd1, 0.0], atol=1e-12)


def test_workspace_frozen_rotations_rectangle():
    est = sample_workspace(monte_carlo_n=10_000, freeze_rotations=True)
    assert math.isclose(est.rect_x_m, 0.293, abs_tol=1e-12)
    assert math.isclose(est.rect_y_m, 0.350, abs_tol=1e-12)
    assert np.ptp(est.points[:, 2]) < 1e-12


def test_workspace_degenerate_limits():
    limits = np.zeros((5, 2))
    est = sample_workspace(monte_carlo_n=10_000, voxel=0.005, limits=limits)
    assert math.isclose(est.volume_m3, 0.005**3)
    assert est.rect_x_m == 0.0 and est.rect_y_m == 0.0


def test_workspace_grid_sampling():
    est = sample_workspace(samples_per_axis=4, voxel=0.01)
    assert est.n_samples == 4**5
    assert len(est.points) == 4**5


def test_workspace_errors():
    with pytest.raises(KinematicsDomainError):
        sample_workspace(monte_carlo_n=1000, voxel=0.0)
    with pytest.raises(KinematicsDomainError):
        sample_workspace(monte_carlo_n=0)
    with pytest.raises(KinematicsDomainError):
        sample_workspace(samples_per_axis=0)


def test_workspace_monotone_in_joint_ranges():
    # same seed: a shrunk box maps the same uniform draws into a subset of
    # reachable tips, and its occupancy may not exceed the full box's
    full = sample_workspace(monte_carlo_n=100_000, voxel=0.01, seed=5).volume_m3
    previous = full
    for scale in (0.75, 0.5, 0.25):
        limits = DEFAULT_LIMITS * scale
        v = sample_workspace(monte_carlo_n=100_000, voxel=0.01, seed=5, limits=limits).volume_m3
        assert v <= previous
        previous = v


def test_workspace_deterministic_for_seed():
    a = sample_workspace(monte_carlo_n=20_000, seed=9)
    b = sample_workspace(monte_carlo_n=20_000, seed=9)
    assert np.array_equal(a.points, b.points)
    assert a.volume_m3 == b.volume_m3
