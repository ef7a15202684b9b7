"""SE(3) kernel suite: exp/log round trips, hat/vee, left Jacobian checks
against a scaling-and-squaring matrix exponential, an adjoint-series oracle
and central finite differences."""

import numpy as np
import pytest
from scipy.linalg import expm

from georover import se3
from georover.se3 import CutLocusError


def random_twist(rng, max_angle=np.pi - 0.1, trans_scale=1.0):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    return np.concatenate([trans_scale * rng.normal(size=3), angle * axis])


def adjoint_rep(xi):
    # 6x6 adjoint of a twist [rho, theta]
    ad = np.zeros((6, 6))
    ad[:3, :3] = se3.hat3(xi[3:])
    ad[3:, 3:] = se3.hat3(xi[3:])
    ad[:3, 3:] = se3.hat3(xi[:3])
    return ad


def left_jacobian_series(xi, terms=40):
    # J_L = sum_n ad^n / (n+1)!
    out = np.eye(6)
    term = np.eye(6)
    ad = adjoint_rep(xi)
    for n in range(1, terms):
        term = term @ ad / (n + 1)
        out = out + term
    return out


def test_hat_vee_inverse_pair():
    rng = np.random.default_rng(0)
    for _ in range(50):
        xi = rng.normal(size=6)
        assert np.array_equal(se3.vee(se3.hat(xi)), xi)


def test_hat_zero_and_translation_pattern():
    assert np.array_equal(se3.hat(np.zeros(6)), np.zeros((4, 4)))
    m = se3.hat(np.array([1.0, 2.0, 3.0, 0.0, 0.0, 0.0]))
    assert np.array_equal(m[:3, 3], [1.0, 2.0, 3.0])
    assert np.array_equal(m[:3, :3], np.zeros((3, 3)))


def test_hat_is_linear():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=6), rng.normal(size=6)
    assert np.allclose(se3.hat(2.0 * a - 3.0 * b), 2.0 * se3.hat(a) - 3.0 * se3.hat(b))


def test_vee_rejects_malformed_matrices():
    bad = np.zeros((4, 4))
    bad[3, 0] = 1.0
    with pytest.raises(ValueError):
        se3.vee(bad)
    bad = np.zeros((4, 4))
    bad[0, 1] = 1.0
    bad[1, 0] = 1.0  # symmetric, not skew
    with pytest.raises(ValueError):
        se3.vee(bad)


def test_exp_matches_matrix_exponential_oracle():
    rng = np.random.default_rng(2)
    for _ in range(200):
        xi = random_twist(rng)
        assert np.linalg.norm(se3.exp_matrix(xi) - expm(se3.hat(xi))) <= 1e-10


def test_exp_quarter_turn_about_z():
    xi = np.array([0.0, 0.0, 0.0, 0.0, 0.0, np.pi / 2])
    t = se3.exp_matrix(xi)
    expected = np.array(
        [
            [0.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    assert np.linalg.norm(t - expected) <= 1e-10
    assert np.linalg.norm(t - expm(se3.hat(xi))) <= 1e-10


def test_exp_log_round_trip_10k():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10_000):
        xi = random_twist(rng, max_angle=np.pi - 0.1, trans_scale=2.0)
        back = se3.log_matrix(se3.exp_matrix(xi))
        worst = max(worst, float(np.max(np.abs(back - xi))))
    assert worst <= 1e-9


def test_log_small_and_tiny_angles():
    rng = np.random.default_rng(4)
    for angle in [0.0, 1e-9, 1e-7, 1e-5, 1e-3, 5e-3, 2e-2]:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        xi = np.concatenate([rng.normal(size=3), angle * axis])
        back = se3.log_matrix(se3.exp_matrix(xi))
        assert np.max(np.abs(back - xi)) <= 1e-12 + 1e-9 * angle


def test_log_near_pi_branch():
    rng = np.random.default_rng(5)
    for _ in range(100):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = np.pi - 10 ** rng.uniform(-8, -5)
        xi = np.concatenate([rng.normal(size=3), angle * axis])
        back = se3.log_matrix(se3.exp_matrix(xi))
        assert np.max(np.abs(back - xi)) <= 1e-6


def test_log_raises_at_cut_locus():
    rot = se3.so3_exp(np.array([np.pi, 0.0, 0.0]))
    with pytest.raises(CutLocusError):
        se3.se3_log(rot, np.zeros(3))


def test_left_jacobian_matches_series_oracle():
    rng = np.random.default_rng(6)
    for _ in range(100):
        xi = random_twist(rng, max_angle=2.5)
        assert np.allclose(se3.left_jacobian(xi), left_jacobian_series(xi), atol=1e-12)


def test_left_jacobian_inverse_consistent():
    rng = np.random.default_rng(7)
    for _ in range(100):
        xi = random_twist(rng, max_angle=np.pi - 0.1)
        prod = se3.left_jacobian(xi) @ se3.left_jacobian_inv(xi)
        assert np.allclose(prod, np.eye(6), atol=1e-9)


def test_left_jacobian_inv_t_identity_cases():
    assert np.allclose(se3.left_jacobian_inv_transpose(np.zeros(6)), np.eye(6))
    # pure translation: J_L^{-T} = [[I, -Q^T/...]] reduces to identity only in
    # the diagonal blocks; with theta = 0 the coupling block is -(rho^)/2 and
    # the defining relation still gives the identity action on translations.
    xi = np.array([0.3, -1.2, 0.7, 0.0, 0.0, 0.0])
    j = se3.left_jacobian(xi)
    assert np.allclose(j[:3, :3], np.eye(3))
    assert np.allclose(j[3:, 3:], np.eye(3))


def test_left_jacobian_inv_defining_relation_finite_difference():
    # d/de log(exp(e*eta^) exp(xi^))^vee |_0 = J_L(xi)^{-1} eta
    rng = np.random.default_rng(8)
    h = 1e-6
    for _ in range(50):
        xi = random_twist(rng, max_angle=1.0)
        xi[3:] *= 1.0 / max(np.linalg.norm(xi[3:]), 1e-12)  # ||theta|| = 1
        jinv = se3.left_jacobian_inv(xi)
        fd = np.zeros((6, 6))
        base = se3.exp_matrix(xi)
        for k in range(6):
            eta = np.zeros(6)
            eta[k] = 1.0
            plus = se3.log_matrix(se3.exp_matrix(h * eta) @ base)
            minus = se3.log_matrix(se3.exp_matrix(-h * eta) @ base)
            fd[:, k] = (plus - minus) / (2.0 * h)
        rel = np.linalg.norm(fd - jinv) / np.linalg.norm(jinv)
        assert rel <= 1e-4
        rel_t = np.linalg.norm(fd.T - se3.left_jacobian_inv_transpose(xi)) / np.linalg.norm(jinv)
        assert rel_t <= 1e-4


def test_left_jacobian_pure_translation_finite_difference():
    xi = np.array([0.5, -0.25, 1.5, 0.0, 0.0, 0.0])
    h = 1e-6
    base = se3.exp_matrix(xi)
    fd = np.zeros((6, 6))
    for k in range(6):
        eta = np.zeros(6)
        eta[k] = 1.0
        plus = se3.log_matrix(se3.exp_matrix(h * eta) @ base)
        minus = se3.log_matrix(se3.exp_matrix(-h * eta) @ base)
        fd[:, k] = (plus - minus) / (2.0 * h)
    assert np.allclose(fd, se3.left_jacobian_inv(xi), atol=1e-6)


def test_left_jacobian_inv_raises_at_pi():
    with pytest.raises(CutLocusError):
        se3.left_jacobian_inv(np.array([0, 0, 0, np.pi, 0, 0]))


def test_quaternion_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(300):
        rot = se3.so3_exp(random_twist(rng)[3:])
        q = se3.quat_from_rotation(rot)
        assert abs(np.linalg.norm(q) - 1.0) <= 1e-12
        assert q[0] >= 0.0
        assert np.allclose(se3.rotation_from_quat(q), rot, atol=1e-12)


def test_quaternion_identity_exact():
    q = se3.quat_from_rotation(np.eye(3))
    assert np.array_equal(q, [1.0, 0.0, 0.0, 0.0])
    assert np.array_equal(se3.rotation_from_quat(q), np.eye(3))


def test_polar_project_restores_rotation():
    rng = np.random.default_rng(10)
    rot = se3.so3_exp(rng.normal(size=3))
    noisy = rot + 1e-8 * rng.normal(size=(3, 3))
    fixed = se3.polar_project(noisy)
    assert np.linalg.norm(fixed.T @ fixed - np.eye(3)) <= 1e-14
    assert abs(np.linalg.det(fixed) - 1.0) <= 1e-12
