"""Manifold layer: exp/log round trips, weighted SE(3) distances, products,
parallel transport and the loop-defect diagnostic."""

import numpy as np
import pytest

from georover import se3
from georover.manifolds import (
    SE3,
    Circle,
    CutLocusError,
    Euclidean,
    MetricWeights,
    Pose,
    ProductManifold,
    circle_point,
    estimate_loop_ratio,
    loop_defect,
)


def test_pose_validation():
    with pytest.raises(ValueError):
        Pose(np.eye(3) * 1.001, np.zeros(3))
    with pytest.raises(ValueError):
        Pose(-np.eye(3), np.zeros(3))  # det -1
    with pytest.raises(ValueError):
        Pose(np.eye(3), np.array([np.nan, 0, 0]))


def test_pose_compose_inverse():
    rng = np.random.default_rng(0)
    m = SE3()
    for _ in range(20):
        a = m.random_pose(rng)
        b = m.random_pose(rng)
        assert np.allclose(((a @ b) @ b.inverse()).matrix(), a.matrix(), atol=1e-12)


def test_circle_exp_quarter_turn():
    m = Circle()
    y = m.exp(np.array([1.0, 0.0]), np.array([0.0, np.pi / 2]))
    assert np.allclose(y, [0.0, 1.0], atol=1e-12)


def test_circle_exp_zero_tangent_any_manifold():
    rng = np.random.default_rng(1)
    for m in [Euclidean(3), Circle(), SE3()]:
        x = m.random_point(rng)
        y = m.exp(x, m.zero_tangent(x))
        assert m.dist2(x, y) <= 1e-24


def test_circle_log_quarter_arc():
    m = Circle()
    v = m.log(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert abs(np.linalg.norm(v) - np.pi / 2) <= 1e-12


def test_circle_exp_rejects_non_tangent():
    m = Circle()
    with pytest.raises(ValueError):
        m.exp(np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_circle_cut_locus():
    m = Circle()
    with pytest.raises(CutLocusError):
        m.log(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))


def test_log_of_self_is_zero():
    rng = np.random.default_rng(2)
    for m in [Euclidean(4), Circle(), SE3(MetricWeights.default())]:
        x = m.random_point(rng)
        assert m.norm(x, m.log(x, x)) <= 1e-12


def test_exp_log_round_trip_all_manifolds():
    rng = np.random.default_rng(3)
    for m, scale in [(Euclidean(5), 3.0), (Circle(), 1.0), (SE3(), 0.5)]:
        for _ in range(200):
            x = m.random_point(rng)
            v = m.random_tangent(rng, x, scale)
            y = m.exp(x, v)
            v2 = m.log(x, y)
            if isinstance(m, Circle) and np.linalg.norm(v) >= np.pi:
                continue  # wrapped past the cut locus; log returns the branch
            assert m.norm(x, np.asarray(v2) - np.asarray(v)) <= 1e-9


def test_se3_round_trip_1000_pairs():
    rng = np.random.default_rng(4)
    m = SE3()
    for _ in range(1000):
        x = m.random_pose(rng, trans_scale=2.0, max_angle=1.25)
        y = m.random_pose(rng, trans_scale=2.0, max_angle=1.25)
        # rotation angle of x^-1 y stays below 2.5 rad by construction
        v = m.log(x, y)
        z = m.exp(x, v)
        assert np.linalg.norm(z.matrix() - y.matrix()) <= 1e-9


def test_se3_dist2_weighted_quarter_turn():
    w = MetricWeights.default()
    m = SE3(w)
    x = Pose.identity()
    y = Pose(se3.so3_exp(np.array([0.0, 0.0, np.pi / 2])), np.zeros(3))
    assert abs(m.dist2(x, y) - 0.1 * (np.pi / 2) ** 2) <= 1e-12


def test_se3_dist2_symmetry_and_left_invariance():
    rng = np.random.default_rng(5)
    m = SE3(MetricWeights.default())
    for _ in range(1000):
        x = m.random_pose(rng, trans_scale=2.0, max_angle=1.4)
        y = m.random_pose(rng, trans_scale=2.0, max_angle=1.4)
        z = m.random_pose(rng, trans_scale=2.0, max_angle=1.4)
        dxy = m.dist2(x, y)
        assert abs(dxy - m.dist2(y, x)) <= 1e-9 * max(1.0, dxy)
        assert abs(m.dist2(z @ x, z @ y) - dxy) <= 1e-9 * max(1.0, dxy)


def test_dist2_zero_iff_equal():
    rng = np.random.default_rng(6)
    m = SE3()
    x = m.random_pose(rng)
    assert m.dist2(x, x) == 0.0
    y = m.exp(x, 1e-3 * np.ones(6))
    assert m.dist2(x, y) > 0.0


def test_chained_exp_rotation_drift():
    rng = np.random.default_rng(7)
    m = SE3()
    x = Pose.identity()
    for _ in range(10_000):
        x = m.exp(x, 0.01 * rng.normal(size=6))
    r = x.rotation
    assert np.linalg.norm(r.T @ r - np.eye(3)) <= 1e-9


def test_product_manifold_componentwise():
    rng = np.random.default_rng(8)
    m = ProductManifold([Euclidean(2), Circle(), SE3(MetricWeights.default())])
    for _ in range(50):
        x = m.random_point(rng)
        v = m.random_tangent(rng, x, 0.3)
        y = m.exp(x, v)
        # componentwise application agrees
        for f, xi, vi, yi in zip(m.factors, x, v, y):
            yc = f.exp(xi, vi)
            assert f.dist2(yc, yi) <= 1e-18
        assert abs(
            m.dist2(x, y) - sum(f.dist2(xi, yi) for f, xi, yi in zip(m.factors, x, y))
        ) <= 1e-12


def test_loop_defect_euclidean_zero():
    rng = np.random.default_rng(9)
    m = Euclidean(4)
    for _ in range(200):
        pts = [m.random_point(rng) for _ in range(4)]
        assert np.linalg.norm(loop_defect(m, *pts)) <= 1e-12


def test_loop_defect_circle_zero_within_half_circle():
    rng = np.random.default_rng(10)
    m = Circle()
    for _ in range(200):
        center = rng.uniform(-np.pi, np.pi)
        pts = [circle_point(center + rng.uniform(-0.7, 0.7)) for _ in range(4)]
        assert np.linalg.norm(loop_defect(m, *pts)) <= 1e-12


def test_loop_defect_se3_ratio_finite():
    rng = np.random.default_rng(11)
    m = SE3(MetricWeights.default())
    ratio = estimate_loop_ratio(m, rng, n_samples=1000)
    assert np.isfinite(ratio)
    assert ratio > 0.0  # curvature shows up


def test_tangent_basis_orthonormal():
    rng = np.random.default_rng(12)
    for m in [Euclidean(3), Circle(), SE3(MetricWeights.default())]:
        x = m.random_point(rng)
        basis = m.tangent_basis(x)
        for i, bi in enumerate(basis):
            for j, bj in enumerate(basis):
                assert abs(m.inner(x, bi, bj) - (1.0 if i == j else 0.0)) <= 1e-12
