"""Distributed SE(3) viewpoint planning.

Every robot keeps a local plan for the whole team (an agents x horizon array
of poses). One planning round retracts each pose toward the neighbors' copies
(weighted by the communication graph, through the left-Jacobian form of the
weighted pose distance), then ascends the robot's local objective: summed
interpolated information/safety scores of its own poses minus a hinge penalty
on pairwise field-of-view overlap across the whole plan.

Scores interpolate a sampled viewpoint grid around each pose, so the score
field stays differentiable; gradients treat the sample set and its scores as
frozen, which is exactly the function the finite-difference oracle checks.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import se3
from .manifolds import CutLocusError, MetricWeights, Pose, SE3
from .mapping import (
    FREE,
    SemanticGrid,
    distance_field,
    entropy_field,
    ml_class,
    ml_project_2d,
)
from .raycast import traverse_grid
from .world import SensorParams, ray_directions

__all__ = [
    "PlannerParams",
    "TeamPlan",
    "Ledger",
    "ledger_sync",
    "ViewpointSet",
    "MapSnapshot",
    "sample_viewpoints",
    "info_score",
    "pose_score",
    "interp_score",
    "overlap",
    "team_objective",
    "plan_consensus_step",
    "plan_local_gradient",
    "alg3_round",
    "plan_discrepancy",
    "TrajectoryResult",
    "astar_trajectory",
]


@dataclass(frozen=True)
class PlannerParams:
    """Planning knobs; ``overlap_radius`` (the pairwise deconfliction radius)
    derives from ``fov_diameter + sample_radius`` when not given explicitly."""

    eps_p: float = 0.1
    alpha_a: float = 0.1  # local step a/(k+1)
    gamma_c: float = 1e-3
    gamma_q: float = 1e-2
    xi_max: float = 16.0
    fov_diameter: float = 4.0
    d_q: float | None = 20.0
    horizon: int = 5
    k_p: int = 20
    gamma_weights: MetricWeights = field(default_factory=MetricWeights.default)
    ground_plane: bool = False
    literal_info_term: bool = False

    def __post_init__(self) -> None:
        if min(self.eps_p, self.gamma_q) < 0 or min(self.alpha_a, self.gamma_c) <= 0:
            raise ValueError("planner gains must be nonnegative (steps positive)")
        if self.xi_max <= 0 or self.fov_diameter <= 0:
            raise ValueError("radii must be positive")
        if self.horizon < 1 or self.k_p < 0:
            raise ValueError("horizon must be >= 1 and k_p >= 0")
        if self.d_q is None:
            object.__setattr__(self, "d_q", self.fov_diameter + self.xi_max)
        elif self.d_q <= 0:
            raise ValueError("overlap radius must be positive")

    def alpha(self, k: int) -> float:
        return self.alpha_a / (k + 1.0)


@dataclass
class TeamPlan:
    """One agent's local copy of the whole team's pose trajectories."""

    poses: np.ndarray  # (n_agents, horizon) object array of Pose

    def __post_init__(self) -> None:
        poses = np.asarray(self.poses, dtype=object)
        if poses.ndim != 2:
            raise ValueError("plan must be agents x horizon")
        for p in poses.reshape(-1):
            if not isinstance(p, Pose):
                raise ValueError("plan entries must be Pose instances")
        self.poses = poses

    @property
    def n_agents(self) -> int:
        return self.poses.shape[0]

    @property
    def horizon(self) -> int:
        return self.poses.shape[1]

    def copy(self) -> "TeamPlan":
        return TeamPlan(self.poses.copy())

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Pose]]) -> "TeamPlan":
        arr = np.empty((len(rows), len(rows[0])), dtype=object)
        for i, row in enumerate(rows):
            for t, pose in enumerate(row):
                arr[i, t] = pose
        return cls(arr)


@dataclass
class Ledger:
    """Per-team readiness flags gossiped to trigger synchronized planning."""

    flags: np.ndarray
    owner: int

    def __post_init__(self) -> None:
        self.flags = np.asarray(self.flags, dtype=bool).copy()
        if self.flags.ndim != 1:
            raise ValueError("ledger flags must be a vector")
        if not (0 <= self.owner < self.flags.size):
            raise ValueError("owner outside the team")

    @classmethod
    def empty(cls, n_agents: int, owner: int) -> "Ledger":
        return cls(np.zeros(n_agents, dtype=bool), owner)


def ledger_sync(
    own: Ledger,
    incoming: Ledger,
    is_planning: bool,
    prev_plan_done: bool,
    thresh_p: float,
) -> tuple[Ledger, bool]:
    """Adopt the incoming flags, restate our own readiness, and signal a
    planning start once the ready fraction reaches the threshold. Never
    signals while a plan is already being computed."""
    if incoming.flags.size != own.flags.size:
        raise ValueError("ledger length mismatch")
    merged = Ledger(incoming.flags.copy(), own.owner)
    ready = prev_plan_done and not is_planning
    if ready:
        merged.flags[own.owner] = True
        return merged, bool(merged.flags.mean() >= thresh_p)
    merged.flags[own.owner] = is_planning
    return merged, False


@dataclass
class ViewpointSet:
    """Pose samples inside the weighted geodesic ball around a center pose,
    optionally carrying their scores."""

    center: Pose
    poses: list[Pose]
    scores: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.poses:
            raise ValueError("viewpoint set may not be empty")


@dataclass
class MapSnapshot:
    """Per-planning-round view derived from one robot's map: entropy field,
    maximum-likelihood occupancy, 2-D projection and its distance field."""

    dims: np.ndarray
    cell_size: float
    origin: np.ndarray
    entropy: np.ndarray  # (nx, ny, nz)
    ml_occupied: np.ndarray  # (nx, ny, nz) bool
    occ2d: np.ndarray  # (nx, ny)
    dist2d: np.ndarray  # (nx, ny) meters

    @classmethod
    def from_grid(cls, grid: SemanticGrid, traversable: set[int]) -> "MapSnapshot":
        known = grid.known_mask()
        occupied = known & (ml_class(grid) > 0)
        occ2d = ml_project_2d(grid, traversable)
        return cls(
            dims=grid.dims.copy(),
            cell_size=grid.cell_size,
            origin=grid.origin.copy(),
            entropy=entropy_field(grid),
            ml_occupied=occupied,
            occ2d=occ2d,
            dist2d=distance_field(occ2d, grid.cell_size),
        )

    def contains(self, point: np.ndarray) -> bool:
        rel = (np.asarray(point, dtype=float) - self.origin) / self.cell_size
        return bool(np.all(rel >= 0.0) and np.all(rel < self.dims))

    def column_of(self, point: np.ndarray) -> tuple[int, int]:
        rel = (np.asarray(point[:2], dtype=float) - self.origin[:2]) / self.cell_size
        cell = np.floor(rel).astype(int)
        cell = np.clip(cell, 0, self.dims[:2] - 1)
        return int(cell[0]), int(cell[1])


def sample_viewpoints(center: Pose, params: PlannerParams) -> ViewpointSet:
    """Deterministic grid: body-plane position offsets {-r/2, 0, r/2}^2 times
    yaw offsets {-pi/4, 0, pi/4}, then filtered to the weighted geodesic ball
    of radius ``xi_max``. The center itself is always a sample."""
    manifold = SE3(params.gamma_weights)
    r = params.xi_max
    degenerate = r < 1e-6  # offsets collapse onto the center; deduplicate
    poses = []
    for dx in (-r / 2.0, 0.0, r / 2.0):
        for dy in (-r / 2.0, 0.0, r / 2.0):
            for dyaw in (-np.pi / 4.0, 0.0, np.pi / 4.0):
                rot = center.rotation @ se3.so3_exp(np.array([0.0, 0.0, dyaw]))
                trans = center.translation + center.rotation @ np.array([dx, dy, 0.0])
                cand = Pose(se3.polar_project(rot), trans)
                if manifold.dist2(center, cand) > r * r + 1e-12:
                    continue
                if degenerate and any(
                    manifold.dist2(kept, cand) <= 1e-24 for kept in poses
                ):
                    continue
                poses.append(cand)
    return ViewpointSet(center, poses)


def batch_info_scores(
    snapshot: MapSnapshot, poses: Sequence[Pose], sensor: SensorParams
) -> np.ndarray:
    """Information score for several poses in one grid traversal: per pose,
    the summed cell entropy over its visible cell set (rays stop at the
    first maximum-likelihood occupied cell or at range; each cell counts
    once per pose even when several rays cross it). Poses outside the grid
    score zero."""
    base_dirs = ray_directions(sensor)
    n_rays = base_dirs.shape[0]
    inside = [k for k, p in enumerate(poses) if snapshot.contains(p.translation)]
    scores = np.zeros(len(poses))
    if not inside:
        return scores
    origins = np.repeat(
        np.stack([poses[k].translation for k in inside]), n_rays, axis=0
    )
    dirs = np.concatenate([base_dirs @ poses[k].rotation.T for k in inside])
    trav = traverse_grid(
        origins,
        dirs,
        np.full(dirs.shape[0], sensor.max_range),
        snapshot.dims,
        snapshot.cell_size,
        snapshot.origin,
        stop_mask=snapshot.ml_occupied,
    )
    if trav.ray_ids.size == 0:
        return scores
    n_cells = int(np.prod(snapshot.dims))
    pose_of_ray = trav.ray_ids // n_rays
    key = pose_of_ray.astype(np.int64) * n_cells + trav.flat_cells(snapshot.dims)
    uniq = np.unique(key)
    sums = np.zeros(len(inside))
    np.add.at(sums, uniq // n_cells, snapshot.entropy.reshape(-1)[uniq % n_cells])
    scores[np.asarray(inside)] = sums
    return scores


def info_score(snapshot: MapSnapshot, pose: Pose, sensor: SensorParams) -> float:
    """Summed cell entropy over the set of cells visible from the pose."""
    return float(batch_info_scores(snapshot, [pose], sensor)[0])


def pose_score(
    snapshot: MapSnapshot, pose: Pose, sensor: SensorParams, params: PlannerParams
) -> float:
    """Information score plus the log-distance safety term."""
    cx, cy = snapshot.column_of(pose.translation)
    return info_score(snapshot, pose, sensor) + params.gamma_c * float(
        np.log(snapshot.dist2d[cx, cy])
    )


def score_viewpoints(
    snapshot: MapSnapshot, viewset: ViewpointSet, sensor: SensorParams, params: PlannerParams
) -> ViewpointSet:
    scores = batch_info_scores(snapshot, viewset.poses, sensor)
    for k, v in enumerate(viewset.poses):
        cx, cy = snapshot.column_of(v.translation)
        scores[k] += params.gamma_c * float(np.log(snapshot.dist2d[cx, cy]))
    viewset.scores = scores
    return viewset


def _interp_weights(
    center: Pose, viewset: ViewpointSet, params: PlannerParams
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Convex weights lambda over the samples, their scaled distances d_bar,
    and the relative twists from the center to each sample."""
    manifold = SE3(params.gamma_weights)
    xis = [manifold.log(center, v) for v in viewset.poses]
    d = np.array([np.sqrt(max(manifold.inner(center, x, x), 0.0)) for x in xis])
    d_bar = (np.pi / params.xi_max) * d
    lam = 1.0 + np.cos(d_bar)
    total = float(lam.sum())
    return lam / total, d_bar, xis


def interp_score(
    snapshot: MapSnapshot,
    pose: Pose,
    sensor: SensorParams,
    params: PlannerParams,
    viewset: ViewpointSet | None = None,
) -> tuple[float, np.ndarray, ViewpointSet]:
    """Interpolated score at the pose: the lambda-weighted combination of the
    sample scores. Returns (value, lambda weights, the scored sample set)."""
    if viewset is None:
        viewset = score_viewpoints(snapshot, sample_viewpoints(pose, params), sensor, params)
    elif viewset.scores is None:
        viewset = score_viewpoints(snapshot, viewset, sensor, params)
    lam, _, _ = _interp_weights(pose, viewset, params)
    return float(np.dot(lam, viewset.scores)), lam, viewset


def overlap(x: Pose, y: Pose, params: PlannerParams) -> float:
    """Squared hinge on position proximity: max(0, 2 d_q - |p_x - p_y|)^2."""
    gap = 2.0 * params.d_q - float(np.linalg.norm(x.translation - y.translation))
    return max(0.0, gap) ** 2


def _pair_weight(i: int, ti: int, j: int, tj: int) -> float:
    if i == j and ti == tj:
        return 0.0
    return 0.5 if i == j else 1.0


def team_objective(
    plan: TeamPlan,
    own: int,
    snapshot: MapSnapshot,
    sensor: SensorParams,
    params: PlannerParams,
    sample_sets: dict[int, ViewpointSet] | None = None,
) -> float:
    """Own-row interpolated scores minus the weighted pairwise overlap over
    the whole plan. ``sample_sets`` (one scored set per own pose index)
    freezes the interpolation anchors, matching the gradient's convention."""
    total = 0.0
    for t in range(plan.horizon):
        viewset = sample_sets.get(t) if sample_sets else None
        value, _, _ = interp_score(snapshot, plan.poses[own, t], sensor, params, viewset)
        total += value
    if params.gamma_q > 0.0:
        penalty = 0.0
        for t in range(plan.horizon):
            for j in range(plan.n_agents):
                for t2 in range(plan.horizon):
                    w = _pair_weight(own, t, j, t2)
                    if w == 0.0:
                        continue
                    penalty += w * overlap(plan.poses[own, t], plan.poses[j, t2], params)
        total -= params.gamma_q * penalty
    return total


def _log_with_branch(manifold: SE3, x: Pose, y: Pose, cut_locus: str) -> np.ndarray:
    """Relative twist log(x^-1 y); at the rotation cut locus (angle exactly
    pi, where the branch is ambiguous but the squared distance is not) the
    "perturb" mode picks a branch via a deterministic positive yaw nudge."""
    try:
        return manifold.log(x, y)
    except CutLocusError:
        if cut_locus != "perturb":
            raise
        nudged = Pose(
            se3.polar_project(y.rotation @ se3.so3_exp(np.array([0.0, 0.0, 1e-6]))),
            y.translation,
        )
        return manifold.log(x, nudged)


def plan_consensus_step(
    plan: TeamPlan,
    neighbor_plans: Sequence[tuple[float, TeamPlan]],
    eps_p: float,
    weights: MetricWeights,
    ground_plane: bool = False,
    cut_locus: str = "raise",
) -> TeamPlan:
    """Retract every pose of the local plan toward the neighbors' copies:
    X <- X exp(eps_p * sum_j A_ij (J_L^{-T}(xi_j) Gamma xi_j)^hat) with
    xi_j = log(X^-1 X_j)."""
    manifold = SE3(weights)
    out = plan.copy()
    for l in range(plan.n_agents):
        for t in range(plan.horizon):
            x = plan.poses[l, t]
            total = np.zeros(6)
            for a_ij, nplan in neighbor_plans:
                xi = _log_with_branch(manifold, x, nplan.poses[l, t], cut_locus)
                total += a_ij * (
                    se3.left_jacobian_inv_transpose(xi) @ (weights.gamma * xi)
                )
            step = eps_p * total
            if ground_plane:
                step[2] = step[3] = step[4] = 0.0
            out.poses[l, t] = manifold.exp(x, step)
    return out


def plan_local_gradient(
    plan: TeamPlan,
    own: int,
    snapshot: MapSnapshot,
    sensor: SensorParams,
    params: PlannerParams,
    sample_sets: dict[int, ViewpointSet] | None = None,
) -> np.ndarray:
    """Ascent gradient of :func:`team_objective` with respect to every pose
    of the local plan, as body-frame twists (agents x horizon x 6).

    The information part differentiates the lambda interpolation over the
    frozen sample sets; the overlap part pushes paired positions apart
    through the squared hinge. ``literal_info_term`` switches the information
    part to the constant-score reading (anchor score substituted for the
    sample scores, interpolation scale constant dropped) for comparison.
    """
    grads = np.zeros((plan.n_agents, plan.horizon, 6))
    gamma = params.gamma_weights.gamma
    scale = (np.pi / params.xi_max) ** 2

    for t in range(plan.horizon):
        anchor = plan.poses[own, t]
        viewset = sample_sets.get(t) if sample_sets else None
        f_val, _, viewset = interp_score(snapshot, anchor, sensor, params, viewset)
        lam, d_bar, xis = _interp_weights(anchor, viewset, params)
        c_set = float((1.0 + np.cos(d_bar)).sum())
        if params.literal_info_term:
            anchor_score = pose_score(snapshot, anchor, sensor, params)
            coeffs = (anchor_score - f_val) * np.ones_like(d_bar)
            term_scale = 1.0
        else:
            coeffs = viewset.scores - f_val
            term_scale = scale
        sinc = np.where(d_bar < 1e-8, 1.0, np.sin(d_bar) / np.where(d_bar < 1e-8, 1.0, d_bar))
        acc = np.zeros(6)
        for coeff, s_val, xi in zip(coeffs, sinc, xis):
            if np.all(xi == 0.0):
                continue
            acc += coeff * s_val * (se3.left_jacobian_inv_transpose(xi) @ (gamma * xi))
        grads[own, t] += term_scale * acc / c_set

    if params.gamma_q > 0.0:
        for t in range(plan.horizon):
            p_own = plan.poses[own, t].translation
            r_own = plan.poses[own, t].rotation
            for l in range(plan.n_agents):
                for t2 in range(plan.horizon):
                    w = _pair_weight(own, t, l, t2)
                    if w == 0.0:
                        continue
                    p_other = plan.poses[l, t2].translation
                    disp = p_own - p_other
                    dist = float(np.linalg.norm(disp))
                    if dist >= 2.0 * params.d_q:
                        continue
                    if dist < 1e-12:
                        # coincident positions: deterministic +x tie-break for
                        # the lexicographically smaller (agent, step)
                        direction = np.array([1.0, 0.0, 0.0])
                        if (l, t2) < (own, t):
                            direction = -direction
                        c_tot = params.gamma_q * w * direction * 2.0 * params.d_q
                    else:
                        c_disp = w * disp
                        c_tot = params.gamma_q * c_disp * (2.0 * params.d_q / dist - 1.0)
                    # factor 2 from differentiating the squared hinge
                    grads[own, t, :3] += 2.0 * r_own.T @ c_tot
                    grads[l, t2, :3] -= 2.0 * plan.poses[l, t2].rotation.T @ c_tot
    return grads


def alg3_round(
    plans: dict[int, TeamPlan],
    graph,
    snapshots: dict[int, MapSnapshot],
    sensor: SensorParams,
    params: PlannerParams,
    k: int,
) -> dict[int, TeamPlan]:
    """One synchronous planning round for all participating agents: consensus
    over neighbor plans, then a local-gradient retraction with step
    alpha(k). Agents absent from ``plans`` are skipped; their consensus
    weight is simply not applied (no renormalization)."""
    manifold = SE3(params.gamma_weights)
    consented: dict[int, TeamPlan] = {}
    for i, plan in plans.items():
        nbrs = [
            (graph.weights[i, j], plans[j]) for j in graph.neighbors(i) if j in plans
        ]
        if params.eps_p > 0.0 and nbrs:
            consented[i] = plan_consensus_step(
                plan, nbrs, params.eps_p, params.gamma_weights, params.ground_plane
            )
        else:
            consented[i] = plan.copy()
    out: dict[int, TeamPlan] = {}
    alpha = params.alpha(k)
    for i, plan in consented.items():
        grads = plan_local_gradient(plan, i, snapshots[i], sensor, params)
        new = plan.copy()
        for l in range(plan.n_agents):
            for t in range(plan.horizon):
                step = alpha * grads[l, t]
                if params.ground_plane:
                    step[2] = step[3] = step[4] = 0.0
                new.poses[l, t] = manifold.exp(plan.poses[l, t], step)
        out[i] = new
    return out


def plan_discrepancy(plans: Sequence[TeamPlan], graph, weights: MetricWeights) -> float:
    """Aggregate plan disagreement: sum over edges of A_ij times the summed
    weighted squared pose distances between the two local plans. Pose pairs
    on the rotation cut locus take the branch-independent distance there."""
    manifold = SE3(weights)
    total = 0.0
    for i, j in graph.edges:
        pi, pj = plans[i], plans[j]
        for l in range(pi.n_agents):
            for t in range(pi.horizon):
                xi = _log_with_branch(
                    manifold, pi.poses[l, t], pj.poses[l, t], "perturb"
                )
                total += graph.weights[i, j] * float(np.dot(xi * weights.gamma, xi))
    return total


# --- local trajectory extraction ---------------------------------------------

_SQRT2 = float(np.sqrt(2.0))
_MOVES = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, _SQRT2),
    (1, -1, _SQRT2),
    (-1, 1, _SQRT2),
    (-1, -1, _SQRT2),
)


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (_SQRT2 - 1.0) * min(dx, dy)


def astar_cells(occ: np.ndarray, start: tuple[int, int], goal: tuple[int, int]):
    """Shortest 8-connected path over FREE cells with the octile heuristic;
    ties break by heap insertion order. Returns the cell list or None."""
    if occ[start] != FREE or occ[goal] != FREE:
        return None
    counter = 0
    best = {start: 0.0}
    came: dict[tuple[int, int], tuple[int, int] | None] = {start: None}
    heap = [(_octile(start, goal), counter, start)]
    nx, ny = occ.shape
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur == goal:
            path = []
            node: tuple[int, int] | None = cur
            while node is not None:
                path.append(node)
                node = came[node]
            return list(reversed(path))
        g_cur = best[cur]
        for dx, dy, cost in _MOVES:
            nxt = (cur[0] + dx, cur[1] + dy)
            if not (0 <= nxt[0] < nx and 0 <= nxt[1] < ny) or occ[nxt] != FREE:
                continue
            g_new = g_cur + cost
            if g_new < best.get(nxt, np.inf) - 1e-12:
                best[nxt] = g_new
                came[nxt] = cur
                counter += 1
                heapq.heappush(heap, (g_new + _octile(nxt, goal), counter, nxt))
    return None


def _reachable_free(occ: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(occ.shape, dtype=bool)
    stack = [start]
    mask[start] = True
    nx, ny = occ.shape
    while stack:
        cx, cy = stack.pop()
        for dx, dy, _ in _MOVES:
            nxt = (cx + dx, cy + dy)
            if 0 <= nxt[0] < nx and 0 <= nxt[1] < ny and not mask[nxt] and occ[nxt] == FREE:
                mask[nxt] = True
                stack.append(nxt)
    return mask


@dataclass
class TrajectoryResult:
    poses: list[Pose]
    cells: list[tuple[int, int]]
    substituted: list[bool]  # one flag per waypoint


def astar_trajectory(
    occ: np.ndarray,
    start: Pose,
    waypoints: Sequence[Pose],
    cell_size: float,
    origin,
    z: float = 0.0,
) -> TrajectoryResult:
    """Concatenated shortest paths through the waypoints over FREE cells.

    Unreachable waypoints are replaced by the reachable FREE cell nearest to
    them (Euclidean, deterministic ties) and flagged. The start cell must be
    FREE; a grid without FREE cells is an error. Output poses sit at cell
    centers with yaw along the step direction, ending each leg with the
    waypoint's own yaw.
    """
    occ = np.asarray(occ)
    origin = np.asarray(origin, dtype=float)
    if not np.any(occ == FREE):
        raise ValueError("no free cell in the occupancy grid")

    def cell_of(pose: Pose) -> tuple[int, int]:
        rel = (pose.translation[:2] - origin[:2]) / cell_size
        cell = np.clip(np.floor(rel).astype(int), 0, np.asarray(occ.shape) - 1)
        return int(cell[0]), int(cell[1])

    def center(cell: tuple[int, int], yaw: float) -> Pose:
        cx = origin[0] + (cell[0] + 0.5) * cell_size
        cy = origin[1] + (cell[1] + 0.5) * cell_size
        return Pose.from_xy_yaw(cx, cy, yaw, z=z)

    start_cell = cell_of(start)
    if occ[start_cell] != FREE:
        raise ValueError("start cell is not FREE")
    reachable = _reachable_free(occ, start_cell)
    free_cells = np.argwhere(reachable)

    cells: list[tuple[int, int]] = [start_cell]
    poses: list[Pose] = []
    substituted: list[bool] = []
    cur = start_cell
    cur_yaw = start.yaw()
    for wp in waypoints:
        goal = cell_of(wp)
        flag = False
        if not (0 <= goal[0] < occ.shape[0] and 0 <= goal[1] < occ.shape[1]) or not reachable[
            goal
        ]:
            d2 = ((free_cells - np.asarray(goal)) ** 2).sum(axis=1)
            order = np.lexsort((free_cells[:, 1], free_cells[:, 0], d2))
            goal = tuple(int(v) for v in free_cells[order[0]])
            flag = True
        substituted.append(flag)
        path = astar_cells(occ, cur, goal)
        assert path is not None  # goal chosen from the reachable set
        for prev, nxt in zip(path[:-1], path[1:]):
            yaw = float(np.arctan2(nxt[1] - prev[1], nxt[0] - prev[0]))
            poses.append(center(nxt, yaw))
            cells.append(nxt)
            cur_yaw = yaw
        wp_yaw = wp.yaw()
        if not poses or cells[-1] != goal or abs(cur_yaw - wp_yaw) > 1e-12:
            poses.append(center(goal, wp_yaw))
            cells.append(goal)
            cur_yaw = wp_yaw
        cur = goal
    return TrajectoryResult(poses, cells, substituted)
