"""Consensus optimizer: graph validation, aggregate distance against a
brute-force oracle, gradient against finite differences, step-size gate,
monotone disagreement, and the circle eigenvector demonstration."""

import numpy as np
import pytest

from georover.consensus import (
    CommGraph,
    Problem,
    ScheduleError,
    StepSchedule,
    StopRule,
    aggregate_distance,
    alg1_iterate,
    consensus_gradient,
    eigenvector_local_gradient,
    eigenvector_problem,
    harmonic_schedule,
    leading_eigenvector,
    run,
    JointState,
)
from georover.manifolds import Circle, Euclidean, circle_point


def random_connected_graph(rng, n):
    edges = {(i, i + 1) for i in range(n - 1)}  # spanning path
    for _ in range(n):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            edges.add((min(i, j), max(i, j)))
    return CommGraph.metropolis(n, edges)


def test_graph_validation():
    with pytest.raises(ValueError):
        CommGraph.metropolis(4, [(0, 1), (2, 3)])  # disconnected
    a = np.array([[0.5, 0.5], [0.4, 0.6]])
    with pytest.raises(ValueError):
        CommGraph(2, frozenset({(0, 1)}), a)  # asymmetric
    a = np.array([[0.5, 0.6], [0.6, 0.5]])
    with pytest.raises(ValueError):
        CommGraph(2, frozenset({(0, 1)}), a)  # rows don't sum to 1


def test_metropolis_weights_k3():
    g = CommGraph.metropolis(3, [(0, 1), (1, 2), (0, 2)])
    assert np.allclose(g.weights, np.full((3, 3), 1.0 / 3.0))


def test_aggregate_distance_simple():
    m = Euclidean(1)
    g = CommGraph.metropolis(2, [(0, 1)])
    joint = JointState(m, [np.array([0.0]), np.array([2.0])])
    assert abs(aggregate_distance(joint, g) - 0.5 * 4.0) <= 1e-15
    same = JointState(m, [np.array([1.0]), np.array([1.0])])
    assert aggregate_distance(same, g) == 0.0


def test_aggregate_distance_brute_force_oracle():
    rng = np.random.default_rng(0)
    m = Euclidean(3)
    for _ in range(30):
        n = int(rng.integers(3, 8))
        g = random_connected_graph(rng, n)
        joint = JointState(m, [m.random_point(rng) for _ in range(n)])
        # brute force: halved double loop over ordered pairs
        brute = 0.0
        for i in range(n):
            for j in range(n):
                if i != j and g.weights[i, j] > 0:
                    brute += g.weights[i, j] * m.dist2(joint.states[i], joint.states[j])
        brute /= 2.0
        assert abs(aggregate_distance(joint, g) - brute) <= 1e-12 * max(1.0, brute)


def test_consensus_gradient_zero_at_agreement():
    m = Euclidean(2)
    g = CommGraph.metropolis(3, [(0, 1), (1, 2), (0, 2)])
    x = np.array([0.3, -0.7])
    joint = JointState(m, [x.copy() for _ in range(3)])
    for i in range(3):
        assert np.linalg.norm(consensus_gradient(joint, g, i)) <= 1e-15


def test_consensus_gradient_two_agent_value():
    m = Euclidean(1)
    g = CommGraph.metropolis(2, [(0, 1)])
    joint = JointState(m, [np.array([0.0]), np.array([2.0])])
    assert np.allclose(consensus_gradient(joint, g, 0), [-2.0])


def test_consensus_gradient_finite_difference():
    rng = np.random.default_rng(1)
    h = 1e-6
    for m in [Euclidean(3), Circle()]:
        for _ in range(20):
            n = int(rng.integers(3, 6))
            g = random_connected_graph(rng, n)
            if isinstance(m, Circle):
                center = rng.uniform(-np.pi, np.pi)
                states = [circle_point(center + rng.uniform(-0.5, 0.5)) for _ in range(n)]
            else:
                states = [m.random_point(rng) for _ in range(n)]
            joint = JointState(m, states)
            i = int(rng.integers(0, n))
            grad = consensus_gradient(joint, g, i)
            for b in m.tangent_basis(states[i]):
                plus = list(states)
                minus = list(states)
                plus[i] = m.exp(states[i], h * np.asarray(b))
                minus[i] = m.exp(states[i], -h * np.asarray(b))
                fd = (
                    aggregate_distance(JointState(m, plus), g)
                    - aggregate_distance(JointState(m, minus), g)
                ) / (2.0 * h)
                ana = m.inner(states[i], grad, b)
                assert abs(fd - ana) <= 1e-4 * max(1.0, abs(ana))


def test_schedule_gate():
    m = Euclidean(1)
    # L = 4 on flat manifolds: epsilon must be below 0.5
    harmonic_schedule(0.49, 1.0).validate(m)
    with pytest.raises(ScheduleError):
        harmonic_schedule(0.5, 1.0).validate(m)
    with pytest.raises(ScheduleError):
        harmonic_schedule(0.6, 1.0).validate(m)
    with pytest.raises(ScheduleError):
        StepSchedule(-0.1, lambda k: 0.0)


def test_iterate_fixed_point_and_two_agent_average():
    m = Euclidean(1)
    g = CommGraph.metropolis(2, [(0, 1)])
    sched = StepSchedule(0.1, lambda k: 0.0)
    # consensus reached + zero gradients -> unchanged
    joint = JointState(m, [np.array([1.5]), np.array([1.5])])
    out = alg1_iterate(joint, g, sched, 0, lambda i, x: np.zeros(1))
    assert np.allclose([s[0] for s in out.states], [1.5, 1.5])
    # x = (0, 2), A offdiag 0.5, eps 0.1, alpha 0: x~ = x - eps * (-2*0.5*(xj-xi))
    joint = JointState(m, [np.array([0.0]), np.array([2.0])])
    out = alg1_iterate(joint, g, sched, 0, lambda i, x: np.zeros(1))
    assert np.allclose([s[0] for s in out.states], [0.2, 1.8])


def test_run_zero_iters_returns_initial_empty_trace():
    m = Euclidean(2)
    g = CommGraph.metropolis(2, [(0, 1)])
    prob = Problem(m, [np.zeros(2), np.ones(2)], lambda i, x: np.zeros(2))
    final, trace = run(prob, g, harmonic_schedule(0.1, 1.0), StopRule(0, phi_tol=0.0))
    assert np.allclose(final.states[1], np.ones(2))
    assert trace.phi == [] and trace.stopped_by == "max_iters"


def test_consensus_only_phi_monotone_100_instances():
    rng = np.random.default_rng(2)
    m = Euclidean(2)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        g = random_connected_graph(rng, n)
        eps = float(rng.uniform(0.01, 0.499))
        sched = StepSchedule(eps, lambda k: 0.0)
        prob = Problem(m, [m.random_point(rng) for _ in range(n)], lambda i, x: np.zeros(2))
        _, trace = run(prob, g, sched, StopRule(40))
        phis = np.array(trace.phi)
        assert np.all(np.diff(phis) <= 1e-12 * np.maximum(1.0, phis[:-1]))


def test_eigenvector_local_gradient_properties():
    rng = np.random.default_rng(3)
    # eigenvector input -> zero tangent
    data = rng.normal(size=(30, 2))
    cov = data.T @ data
    _, vecs = np.linalg.eigh(cov)
    for k in range(2):
        g = eigenvector_local_gradient(vecs[:, k], data)
        assert np.linalg.norm(g) <= 1e-10
    # isotropic data -> zero tangent everywhere
    x = circle_point(0.83)
    assert np.linalg.norm(eigenvector_local_gradient(x, np.eye(2))) <= 1e-12
    # finite differences along the circle
    m = Circle()
    h = 1e-6
    for _ in range(30):
        x = m.random_point(rng)
        g = eigenvector_local_gradient(x, data)
        b = m.tangent_basis(x)[0]
        f = lambda p: float(np.dot(data @ p, data @ p))
        fd = (f(m.exp(x, h * b)) - f(m.exp(x, -h * b))) / (2.0 * h)
        assert abs(fd - np.dot(g, b)) <= 1e-4 * max(1.0, abs(fd))


def test_eigenvector_demo_converges_to_global_eigenvector():
    rng = np.random.default_rng(4)
    spread = rng.normal(size=(80, 2)) @ np.diag([2.5, 0.4])
    rot = np.array(
        [[np.cos(0.6), -np.sin(0.6)], [np.sin(0.6), np.cos(0.6)]]
    )
    data = spread @ rot.T
    prob = eigenvector_problem([data[:40], data[40:]], rng=rng)
    g = CommGraph.metropolis(2, [(0, 1)])
    final, trace = run(prob, g, harmonic_schedule(0.45, 0.05), StopRule(20000))
    v1 = leading_eigenvector(data)
    for x in final.states:
        assert abs(abs(float(np.dot(x, v1))) - 1.0) <= 1e-6
    # Theorem-1-style optimality check: running max of F reaches F(x*)
    f_star = 0.5 * float(v1 @ data.T @ data @ v1)
    assert trace.best_objective() >= f_star - 1e-4
    assert trace.phi[-1] <= 1e-8


def test_leading_eigenvector_degenerate_rejected():
    with pytest.raises(ValueError):
        leading_eigenvector(np.eye(2))


def test_eigenvector_demo_axis_aligned_data():
    # rows only along +x: both agents settle on (+-1, 0)
    rng = np.random.default_rng(5)
    data = np.zeros((40, 2))
    data[:, 0] = rng.normal(scale=2.0, size=40)
    prob = eigenvector_problem([data[:20], data[20:]], rng=rng)
    g = CommGraph.metropolis(2, [(0, 1)])
    final, _ = run(prob, g, harmonic_schedule(0.45, 0.05), StopRule(4000))
    for x in final.states:
        assert abs(abs(x[0]) - 1.0) <= 1e-6
        assert abs(x[1]) <= 2e-3
