"""Two-phase distributed optimizer over a communication graph: a consensus
retraction followed by a local-objective retraction per agent per iteration.

Each agent holds one manifold point. The consensus phase descends the
aggregate disagreement ``phi(x) = sum_{edges} A_ij d^2(x_i, x_j)`` using only
one-hop neighbor states; the local phase ascends the agent's own objective.
Step sizes follow a fixed consensus step (validated against the smoothness
constant ``L = 4 (1 + rho)``) and a Robbins-Monro schedule for the local
phase. Includes the two-agent circle eigenvector demonstration problem.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .manifolds import Circle, Manifold

__all__ = [
    "CommGraph",
    "ScheduleError",
    "StepSchedule",
    "harmonic_schedule",
    "smoothness_constant",
    "JointState",
    "OptTrace",
    "StopRule",
    "Problem",
    "aggregate_distance",
    "consensus_gradient",
    "alg1_iterate",
    "run",
    "eigenvector_local_gradient",
    "eigenvector_problem",
    "leading_eigenvector",
]


class ScheduleError(ValueError):
    """Step schedule outside its validated range."""


def _normalize_edges(edges) -> frozenset:
    out = set()
    for i, j in edges:
        if i == j:
            raise ValueError("self-loops are not edges")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


@dataclass(frozen=True)
class CommGraph:
    """Undirected connected agent graph with symmetric row-stochastic weights."""

    n_agents: int
    edges: frozenset
    weights: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.weights, dtype=float)
        n = self.n_agents
        if n < 1 or a.shape != (n, n):
            raise ValueError("weight matrix shape must match the agent count")
        edges = _normalize_edges(self.edges)
        object.__setattr__(self, "edges", edges)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range")
        if np.max(np.abs(a - a.T)) > 1e-12:
            raise ValueError("weights must be symmetric")
        if np.max(np.abs(a.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("weights must be row-stochastic within 1e-12")
        for i in range(n):
            for j in range(n):
                is_edge = i == j or (min(i, j), max(i, j)) in edges
                if is_edge and a[i, j] <= 0.0:
                    raise ValueError(f"weight A[{i},{j}] must be positive")
                if not is_edge and a[i, j] != 0.0:
                    raise ValueError(f"A[{i},{j}] nonzero without an edge")
        if not self._connected(n, edges):
            raise ValueError("communication graph must be connected")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "weights", a)

    @staticmethod
    def _connected(n: int, edges: frozenset) -> bool:
        adj = {i: [] for i in range(n)}
        for i, j in edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == n

    @classmethod
    def metropolis(cls, n_agents: int, edges) -> "CommGraph":
        """Metropolis-Hastings weights: A_ij = 1/(1 + max(deg_i, deg_j)) on
        edges, diagonal takes the remainder; symmetric and row-stochastic."""
        edges = _normalize_edges(edges)
        deg = np.zeros(n_agents, dtype=int)
        for i, j in edges:
            deg[i] += 1
            deg[j] += 1
        a = np.zeros((n_agents, n_agents))
        for i, j in edges:
            a[i, j] = a[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
        for i in range(n_agents):
            a[i, i] = 1.0 - a[i].sum()
        return cls(n_agents, edges, a)

    def neighbors(self, i: int) -> list[int]:
        return [j for j in range(self.n_agents) if j != i and self.weights[i, j] > 0.0]


def smoothness_constant(loop_ratio: float) -> float:
    """Smoothness constant of the aggregate disagreement, 4*(1 + rho)."""
    return 4.0 * (1.0 + loop_ratio)


@dataclass(frozen=True)
class StepSchedule:
    """Consensus step plus local-step sequence.

    ``epsilon`` must lie in (0, 2/L). On manifolds with a known loop ratio the
    check is strict; where the ratio is only empirical a violation is a
    warning, not an error.
    """

    epsilon: float
    alpha: Callable[[int], float]
    family: str = "custom"

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise ScheduleError("consensus step must be positive and finite")

    def validate(self, manifold: Manifold, loop_ratio: float | None = None) -> None:
        rho = loop_ratio if loop_ratio is not None else manifold.loop_ratio
        if rho is None:
            warnings.warn(
                "loop ratio unknown for this manifold; consensus step range "
                "(0, 2/L) cannot be checked strictly",
                stacklevel=2,
            )
            return
        limit = 2.0 / smoothness_constant(rho)
        if not (0.0 < self.epsilon < limit):
            if manifold.loop_ratio is None:
                warnings.warn(
                    f"consensus step {self.epsilon} outside (0, {limit:.6g}) for "
                    f"empirical loop ratio {rho:.3g}",
                    stacklevel=2,
                )
            else:
                raise ScheduleError(
                    f"consensus step {self.epsilon} outside the valid range "
                    f"(0, {limit:.6g}) for L = {smoothness_constant(rho):.6g}"
                )


def harmonic_schedule(epsilon: float, a: float) -> StepSchedule:
    """alpha^(k) = a/(k+1): divergent sum, convergent squared sum."""
    if a <= 0.0:
        raise ScheduleError("harmonic coefficient must be positive")
    return StepSchedule(epsilon, lambda k: a / (k + 1.0), family="harmonic")


@dataclass
class JointState:
    """One manifold point per agent, all on the same manifold."""

    manifold: Manifold
    states: list

    def __post_init__(self) -> None:
        for x in self.states:
            self.manifold.check_point(x)

    def __len__(self) -> int:
        return len(self.states)


@dataclass
class OptTrace:
    """Per-iteration disagreement, objective and update-norm records."""

    phi: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    update_norm: list[float] = field(default_factory=list)
    stopped_by: str = ""

    def best_objective(self) -> float:
        return max(self.objective) if self.objective else float("-inf")


@dataclass(frozen=True)
class StopRule:
    max_iters: int
    phi_tol: float | None = None
    grad_tol: float | None = None

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.max_iters == 0 and self.phi_tol is None and self.grad_tol is None:
            raise ValueError("at least one stopping criterion must be active")


@dataclass
class Problem:
    """Local objectives over a shared manifold.

    ``local_gradient(i, x)`` returns the Riemannian ascent gradient of agent
    i's objective at x; ``objective(i, x)``, when given, feeds the trace of
    ``F(x) = mean_i f_i(x_i)``.
    """

    manifold: Manifold
    initial: list
    local_gradient: Callable[[int, object], object]
    objective: Callable[[int, object], float] | None = None

    def initial_state(self) -> JointState:
        return JointState(self.manifold, list(self.initial))


def _neighbor_view(joint: JointState, graph: CommGraph, i: int):
    """Agent i's one-hop view: own state plus weighted neighbor states."""
    x_i = joint.states[i]
    return x_i, [(graph.weights[i, j], joint.states[j]) for j in graph.neighbors(i)]


def aggregate_distance(joint: JointState, graph: CommGraph) -> float:
    """phi(x) = sum over undirected edges of A_ij d^2(x_i, x_j)."""
    if len(joint) != graph.n_agents:
        raise ValueError("joint state size does not match the graph")
    m = joint.manifold
    total = 0.0
    for i, j in graph.edges:
        total += graph.weights[i, j] * m.dist2(joint.states[i], joint.states[j])
    return total


def consensus_gradient(joint: JointState, graph: CommGraph, i: int):
    """Gradient of phi with respect to x_i: -2 sum_j A_ij Log_{x_i}(x_j).

    Exact wherever dist2 is the squared geodesic distance of the metric
    (Euclidean, circle, their products); the SE(3) planner uses its own
    specialized consensus step.
    """
    if not (0 <= i < graph.n_agents):
        raise ValueError("agent id out of range")
    m = joint.manifold
    x_i, nbrs = _neighbor_view(joint, graph, i)
    grad = m.zero_tangent(x_i)
    for w, x_j in nbrs:
        log_ij = m.log(x_i, x_j)
        if isinstance(grad, tuple):
            grad = tuple(g - 2.0 * w * l for g, l in zip(grad, log_ij))
        else:
            grad = grad - 2.0 * w * log_ij
    return grad


def alg1_iterate(
    joint: JointState,
    graph: CommGraph,
    schedule: StepSchedule,
    k: int,
    local_grads: Callable[[int, object], object],
) -> JointState:
    """One synchronous iteration: every agent reads the k-th states, retracts
    along the consensus direction with step epsilon, then along its own
    objective gradient with step alpha^(k)."""
    m = joint.manifold
    schedule.validate(m)
    alpha = schedule.alpha(k)
    new_states = []
    for i in range(graph.n_agents):
        x_i = joint.states[i]
        g_cons = consensus_gradient(joint, graph, i)
        if isinstance(g_cons, tuple):
            step = tuple(-schedule.epsilon * g for g in g_cons)
        else:
            step = -schedule.epsilon * g_cons
        x_mid = m.exp(x_i, step)
        g_loc = local_grads(i, x_mid)
        if isinstance(g_loc, tuple):
            step2 = tuple(alpha * g for g in g_loc)
        else:
            g_loc = np.asarray(g_loc, dtype=float)
            step2 = alpha * g_loc
        new_states.append(m.exp(x_mid, step2))
    return JointState(m, new_states)


def run(
    problem: Problem,
    graph: CommGraph,
    schedule: StepSchedule,
    stop: StopRule,
) -> tuple[JointState, OptTrace]:
    """Iterate until a stopping criterion fires; the first satisfied one wins
    and is recorded on the trace. The trace holds post-iteration values, so a
    zero-iteration run returns the initial state with an empty trace."""
    m = problem.manifold
    schedule.validate(m)
    joint = problem.initial_state()
    trace = OptTrace()

    def objective_value(state: JointState) -> float:
        return float(
            np.mean([problem.objective(i, x) for i, x in enumerate(state.states)])
        )

    for k in range(stop.max_iters):
        prev = joint
        joint = alg1_iterate(joint, graph, schedule, k, problem.local_gradient)
        update = max(
            m.norm(prev.states[i], m.log(prev.states[i], joint.states[i]))
            for i in range(graph.n_agents)
        )
        phi = aggregate_distance(joint, graph)
        trace.phi.append(phi)
        trace.update_norm.append(update)
        if problem.objective is not None:
            trace.objective.append(objective_value(joint))
        if stop.phi_tol is not None and phi <= stop.phi_tol:
            trace.stopped_by = "phi_tol"
            return joint, trace
        if stop.grad_tol is not None and update <= stop.grad_tol:
            trace.stopped_by = "grad_tol"
            return joint, trace
    trace.stopped_by = "max_iters"
    return joint, trace


def eigenvector_local_gradient(x: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Riemannian ascent gradient of f(x) = |Z x|^2 on the circle: the
    Euclidean gradient 2 Z^T Z x projected onto the tangent at x."""
    x = np.asarray(x, dtype=float)
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("data matrix needs two columns")
    grad = 2.0 * data.T @ (data @ x)
    return grad - float(np.dot(grad, x)) * x


def leading_eigenvector(data: np.ndarray, degenerate_tol: float = 1e-9) -> np.ndarray:
    """Unit leading eigenvector of Z^T Z; rejects (near-)equal eigenvalues,
    where the direction is not identifiable."""
    cov = np.asarray(data, dtype=float).T @ np.asarray(data, dtype=float)
    vals, vecs = np.linalg.eigh(cov)
    if abs(vals[-1] - vals[-2]) <= degenerate_tol:
        raise ValueError("leading eigenvector not unique: eigenvalue gap below 1e-9")
    return vecs[:, -1]


def eigenvector_problem(
    blocks: Sequence[np.ndarray],
    initial: Sequence[np.ndarray] | None = None,
    rng: np.random.Generator | None = None,
) -> Problem:
    """Distributed leading-eigenvector problem: agent i holds data block Z_i
    and ascends |Z_i x|^2 on the circle under the consensus constraint."""
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    manifold = Circle()
    if initial is None:
        if rng is None:
            rng = np.random.default_rng(0)
        initial = [manifold.random_point(rng) for _ in blocks]
    return Problem(
        manifold=manifold,
        initial=list(initial),
        local_gradient=lambda i, x: eigenvector_local_gradient(x, blocks[i]),
        objective=lambda i, x: float(np.dot(blocks[i] @ x, blocks[i] @ x)),
    )
