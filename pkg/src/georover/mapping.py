"""Per-robot multi-class log-odds grid mapping.

Each cell carries a log-odds vector ``h`` of length C+1 against the free
class (``h[0]`` is identically zero) plus accumulated evidence: the running
sum of inverse-model log-likelihoods and the observation count, so the
evidence distribution is the geometric mean of the per-observation inverse
models (switchable to a plain Bayes product via ``normalize_evidence``).

Observation integration walks each ray through the grid, deposits free-space
evidence along the ray and category evidence at the endpoint, then applies
the local gradient of the per-cell evidence objective to the touched cells.
Consensus between robots is a plain weighted average of log-odds vectors.
Also houses the map-derived products the planner needs: maximum-likelihood
2-D projection, distance field, entropy field and frontier extraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .manifolds import Pose
from .netsim import deserialize_map, serialize_map
from .raycast import END_RANGE, traverse_grid
from .world import SemanticRay

__all__ = [
    "UNKNOWN",
    "FREE",
    "OCCUPIED",
    "InverseModelParams",
    "SemanticGrid",
    "softmax",
    "log_odds",
    "integrate_pointcloud",
    "map_consensus_step",
    "map_local_gradient",
    "map_objective",
    "map_discrepancy",
    "normalized_entropy",
    "entropy_field",
    "ml_class",
    "ml_project_2d",
    "distance_field",
    "FrontierResult",
    "frontier_viewpoints",
    "save_snapshot",
    "load_snapshot",
]

UNKNOWN, FREE, OCCUPIED = 0, 1, 2

_KNOWN_TOL = 1e-12


def softmax(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    e = np.exp(h - h.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_odds(p: np.ndarray) -> np.ndarray:
    """Categorical PMF to its log-odds vector against class 0."""
    p = np.asarray(p, dtype=float)
    logs = np.log(p)
    return logs - logs[..., :1]


@dataclass(frozen=True)
class InverseModelParams:
    """Endpoint cells get ``hit_confidence`` mass on the observed category,
    pre-endpoint cells get ``free_confidence`` on the free class; remaining
    mass is uniform over the other classes."""

    hit_confidence: float = 0.9
    free_confidence: float = 0.7

    def validate(self, num_categories: int) -> None:
        if not (1.0 / (num_categories + 1) < self.hit_confidence < 1.0):
            raise ValueError("hit confidence must exceed the uniform weight and stay below 1")
        if not (0.5 < self.free_confidence < 1.0):
            raise ValueError("free confidence must lie in (1/2, 1)")

    def free_log(self, num_categories: int) -> np.ndarray:
        q = np.full(num_categories + 1, (1.0 - self.free_confidence) / num_categories)
        q[0] = self.free_confidence
        return np.log(q)

    def hit_log(self, num_categories: int, category: int) -> np.ndarray:
        q = np.full(num_categories + 1, (1.0 - self.hit_confidence) / num_categories)
        q[category] = self.hit_confidence
        return np.log(q)


class SemanticGrid:
    """Dense multi-class log-odds grid owned by one robot."""

    def __init__(
        self,
        dims,
        cell_size: float,
        origin,
        num_categories: int,
        normalize_evidence: bool = True,
    ):
        self.dims = np.asarray(dims, dtype=int)
        if self.dims.shape != (3,) or np.any(self.dims < 1):
            raise ValueError("dims must be three positive integers")
        if cell_size <= 0.0:
            raise ValueError("cell size must be positive")
        self.cell_size = float(cell_size)
        self.origin = np.asarray(origin, dtype=float)
        self.num_categories = int(num_categories)
        shape = tuple(self.dims) + (self.n_labels,)
        self.h = np.zeros(shape)
        self.log_q_sum = np.zeros(shape)
        self.obs_count = np.zeros(tuple(self.dims), dtype=np.int64)
        self.grad_steps = np.zeros(tuple(self.dims), dtype=np.int64)
        self.normalize_evidence = bool(normalize_evidence)
        self.dirty: set[int] = set()

    @property
    def n_labels(self) -> int:
        return self.num_categories + 1

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    def h_flat(self) -> np.ndarray:
        return self.h.reshape(-1, self.n_labels)

    def known_mask(self) -> np.ndarray:
        """Cells with direct evidence or nonzero (consensus-imported) log-odds."""
        return (self.obs_count > 0) | (np.abs(self.h).max(axis=-1) > _KNOWN_TOL)

    def log_q_t_flat(self, flat_idx: np.ndarray) -> np.ndarray:
        """Evidence log-distribution for the given cells; zero (uniform up to
        gauge) where nothing was observed."""
        sums = self.log_q_sum.reshape(-1, self.n_labels)[flat_idx]
        counts = self.obs_count.reshape(-1)[flat_idx]
        if not self.normalize_evidence:
            return sums
        safe = np.maximum(counts, 1)
        return sums / safe[:, None]

    def set_h_flat(self, flat_idx: np.ndarray, values: np.ndarray) -> None:
        self.h.reshape(-1, self.n_labels)[flat_idx] = values
        self.dirty.update(int(i) for i in np.atleast_1d(flat_idx))

    def drain_dirty(self) -> set[int]:
        out = self.dirty
        self.dirty = set()
        return out

    def cell_of(self, point) -> tuple[int, int, int]:
        rel = (np.asarray(point, dtype=float) - self.origin) / self.cell_size
        cell = np.floor(rel).astype(int)
        return tuple(int(c) for c in cell)


def integrate_pointcloud(
    grid: SemanticGrid,
    pose: Pose,
    cloud: Sequence[SemanticRay],
    directions: np.ndarray,
    params: InverseModelParams,
    alpha: Callable[[int], float] | None = None,
) -> np.ndarray:
    """Deposit one point cloud into the grid and apply the local gradient
    step to every touched cell.

    ``directions`` are the sensor-frame unit directions aligned with the
    cloud. Cells crossed before a ray's endpoint receive free-space evidence;
    the endpoint cell receives evidence for the observed category (max-range
    rays contribute free-space evidence only). The gradient step size is
    ``alpha(k)`` with k the cell's own count of previous gradient steps
    (default 1/(k+1)). Returns the flat indices of the touched cells.
    """
    if len(cloud) == 0:
        return np.empty(0, dtype=int)
    directions = np.asarray(directions, dtype=float)
    if directions.shape != (len(cloud), 3):
        raise ValueError("directions must align with the cloud")
    params.validate(grid.num_categories)
    if alpha is None:
        alpha = lambda k: 1.0 / (k + 1.0)

    world_dirs = directions @ pose.rotation.T
    # hit ranges are measured to the hit cell's entry face; nudge past the
    # face so the endpoint cell is the cell being entered
    nudge = 1e-6 * grid.cell_size
    ranges = np.array(
        [r.range if r.max_range_flag else r.range + nudge for r in cloud]
    )
    trav = traverse_grid(
        pose.translation, world_dirs, ranges, grid.dims, grid.cell_size, grid.origin
    )
    if trav.ray_ids.size == 0:
        return np.empty(0, dtype=int)

    free_vec = params.free_log(grid.num_categories)
    hit_vecs = np.stack(
        [free_vec]
        + [params.hit_log(grid.num_categories, c) for c in range(1, grid.n_labels)]
    )

    # endpoint events: last visited cell of rays that terminated in range
    flat = trav.flat_cells(grid.dims)
    end_flat = np.ravel_multi_index(
        (trav.end_cell[:, 0], trav.end_cell[:, 1], trav.end_cell[:, 2]), tuple(grid.dims)
    )
    categories = np.array([r.category for r in cloud])
    is_hit_ray = np.array(
        [(not r.max_range_flag) for r in cloud]
    ) & (trav.end_reason == END_RANGE)
    is_endpoint = is_hit_ray[trav.ray_ids] & (flat == end_flat[trav.ray_ids])

    event_vecs = np.where(
        is_endpoint[:, None], hit_vecs[categories[trav.ray_ids] * is_endpoint], free_vec
    )
    lq = grid.log_q_sum.reshape(-1, grid.n_labels)
    np.add.at(lq, flat, event_vecs)
    np.add.at(grid.obs_count.reshape(-1), flat, 1)

    touched = np.unique(flat)
    h = grid.h.reshape(-1, grid.n_labels)[touched]
    log_q = grid.log_q_t_flat(touched)
    g = map_local_gradient(h, log_q)
    steps = grid.grad_steps.reshape(-1)[touched]
    alphas = np.array([alpha(int(k)) for k in steps])
    h_new = h + alphas[:, None] * g
    h_new = h_new - h_new[:, :1]  # restore the log-odds gauge (h[0] = 0)
    grid.set_h_flat(touched, h_new)
    grid.grad_steps.reshape(-1)[touched] += 1
    return touched


def map_consensus_step(
    h_i: np.ndarray, neighbors: Sequence[tuple[float, np.ndarray]], eps_m: float
) -> np.ndarray:
    """h~ = h_i + eps_m * sum_j A_ij (h_j - h_i); the leading entry stays zero."""
    h_i = np.asarray(h_i, dtype=float)
    out = h_i.copy()
    for weight, h_j in neighbors:
        h_j = np.asarray(h_j, dtype=float)
        if h_j.shape != h_i.shape:
            raise ValueError("log-odds shape mismatch between neighbors")
        out += eps_m * weight * (h_j - h_i)
    return out


def map_local_gradient(h: np.ndarray, log_q: np.ndarray) -> np.ndarray:
    """Gradient of the per-cell evidence objective at log-odds ``h``.

    Exponentials are shifted by the row maximum; the combination is invariant
    to the shift, so the returned value is exact where the unshifted form
    would overflow.
    """
    h = np.asarray(h, dtype=float)
    log_q = np.asarray(log_q, dtype=float)
    if h.shape != log_q.shape:
        raise ValueError("log-odds and evidence shapes differ")
    delta = h - log_q
    e = np.exp(h - h.max(axis=-1, keepdims=True))
    s = e.sum(axis=-1, keepdims=True)
    gamma = (e * delta).sum(axis=-1, keepdims=True)
    return (gamma - s * delta) * e / (s * s)


def map_objective(h: np.ndarray, log_q: np.ndarray) -> np.ndarray:
    """Per-cell objective: sum_c softmax_c(h) * (log q_c - log softmax_c(h));
    equals -KL(softmax(h) || q) when q is normalized."""
    h = np.asarray(h, dtype=float)
    log_q = np.asarray(log_q, dtype=float)
    shifted = h - h.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e.sum(axis=-1, keepdims=True)
    p = e / s
    log_p = shifted - np.log(s)
    return (p * (log_q - log_p)).sum(axis=-1)


def map_discrepancy(grids: Sequence[SemanticGrid], graph) -> float:
    """sum over edges of A_ij * sum over cells of |h_j - h_i|^2."""
    ref = grids[0]
    for g in grids[1:]:
        if not (
            np.array_equal(g.dims, ref.dims)
            and np.allclose(g.origin, ref.origin)
            and g.cell_size == ref.cell_size
            and g.n_labels == ref.n_labels
        ):
            raise ValueError("grids must share geometry")
    total = 0.0
    for i, j in graph.edges:
        diff = grids[j].h - grids[i].h
        total += graph.weights[i, j] * float(np.sum(diff * diff))
    return total


def entropy_field(grid: SemanticGrid) -> np.ndarray:
    """Shannon entropy (nats) of each cell's PMF."""
    p = softmax(grid.h)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, -p * np.log(p), 0.0)
    return terms.sum(axis=-1)


def normalized_entropy(grid: SemanticGrid) -> float:
    """Mean cell entropy over the whole grid."""
    if grid.n_cells == 0:
        raise ValueError("empty map")
    return float(entropy_field(grid).mean())


def ml_class(grid: SemanticGrid) -> np.ndarray:
    """Per-cell maximum-likelihood class (ties resolve to the lowest class)."""
    return np.argmax(grid.h, axis=-1)


def ml_project_2d(grid: SemanticGrid, traversable: set[int]) -> np.ndarray:
    """Collapse the 3-D map onto columns: FREE where some cell is
    maximum-likelihood traversable and none is an obstacle class, OCCUPIED
    where an obstacle class is present, UNKNOWN otherwise.

    Only surface evidence (maximum-likelihood class above 0) classifies a
    column; cells seen as free air say nothing about traversability, so
    air-only columns stay UNKNOWN and keep feeding the frontier.
    """
    surface = grid.known_mask() & (ml_class(grid) > 0)
    ml = ml_class(grid)
    col_trav = (surface & np.isin(ml, list(traversable))).any(axis=2)
    col_obst = (surface & ~np.isin(ml, list(traversable))).any(axis=2)
    occ = np.full(tuple(grid.dims[:2]), UNKNOWN, dtype=np.int8)
    occ[col_obst] = OCCUPIED
    occ[col_trav & ~col_obst] = FREE
    return occ


def distance_field(
    occ: np.ndarray, cell_size: float, max_distance: float | None = None
) -> np.ndarray:
    """Per-column Euclidean distance (meters) to the nearest unsafe cell
    center, where unsafe means OCCUPIED or UNKNOWN. Clamped below at a tenth
    of a cell (so its log stays finite) and above at ``max_distance``."""
    occ = np.asarray(occ)
    if max_distance is None:
        max_distance = 10.0 * cell_size * max(occ.shape)
    unsafe = occ != FREE
    if not unsafe.any():
        return np.full(occ.shape, max_distance)
    dist = ndimage.distance_transform_edt(~unsafe) * cell_size
    return np.clip(dist, cell_size / 10.0, max_distance)


@dataclass
class FrontierResult:
    poses: list[Pose]
    exploration_complete: bool
    n_clusters: int


def frontier_viewpoints(
    occ: np.ndarray,
    start: Pose,
    horizon: int,
    cell_size: float,
    origin,
    z: float = 0.0,
) -> FrontierResult:
    """Viewpoints on frontier clusters: FREE cells 4-adjacent to UNKNOWN,
    clustered by 8-connectivity; one viewpoint per cluster at the cell
    nearest the centroid, yaw facing the unknown side, ordered by descending
    cluster size then distance from the start pose. Short cluster lists pad
    by rotating the last viewpoint; no frontier at all signals completion
    and yields spins in place."""
    if horizon < 1:
        raise ValueError("need at least one viewpoint")
    occ = np.asarray(occ)
    origin = np.asarray(origin, dtype=float)
    unknown = occ == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:, :-1] |= unknown[:, 1:]
    frontier = (occ == FREE) & near_unknown

    def cell_pose(cell, yaw):
        center = origin[:2] + (np.asarray(cell, dtype=float) + 0.5) * cell_size
        return Pose.from_xy_yaw(center[0], center[1], yaw, z=z)

    if not frontier.any():
        poses = [
            cell_pose_from(start, k) for k in range(horizon)
        ]
        return FrontierResult(poses, True, 0)

    labels, n_clusters = ndimage.label(frontier, structure=np.ones((3, 3), dtype=int))
    start_xy = (start.translation[:2] - origin[:2]) / cell_size - 0.5
    start_cell = tuple(np.round(start_xy).astype(int))
    entries = []
    for c in range(1, n_clusters + 1):
        cells = np.argwhere(labels == c)
        # the start cell itself is never an informative viewpoint
        if len(cells) > 1:
            keep = ~np.all(cells == start_cell, axis=1)
            cells = cells[keep]
        centroid = cells.mean(axis=0)
        d2 = ((cells - centroid) ** 2).sum(axis=1)
        pick = cells[np.lexsort((cells[:, 1], cells[:, 0], d2))[0]]
        # face the unknown side: mean offset toward 4-adjacent unknown cells
        direction = np.zeros(2)
        for cx, cy in cells:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = cx + dx, cy + dy
                if 0 <= nx < occ.shape[0] and 0 <= ny < occ.shape[1] and unknown[nx, ny]:
                    direction += (dx, dy)
        yaw = float(np.arctan2(direction[1], direction[0])) if np.any(direction) else 0.0
        dist = float(np.linalg.norm(pick - start_xy))
        entries.append((-len(cells), dist, int(pick[0]), int(pick[1]), yaw))
    entries.sort()
    poses = [
        cell_pose((e[2], e[3]), e[4]) for e in entries[:horizon]
    ]
    while len(poses) < horizon:
        last = poses[-1]
        poses.append(
            Pose.from_xy_yaw(
                last.translation[0],
                last.translation[1],
                last.yaw() + np.pi / 2.0,
                z=z,
            )
        )
    return FrontierResult(poses, False, n_clusters)


def cell_pose_from(start: Pose, k: int) -> Pose:
    """Start pose rotated by k quarter turns (exploration-complete spins)."""
    return Pose.from_xy_yaw(
        start.translation[0],
        start.translation[1],
        start.yaw() + k * np.pi / 2.0,
        z=start.translation[2],
    )


def save_snapshot(grid: SemanticGrid, path: str | Path) -> None:
    """JSON geometry header plus the known cells in the map wire format."""
    known_flat = np.nonzero(grid.known_mask().reshape(-1))[0]
    h = grid.h.reshape(-1, grid.n_labels)
    cells = [(int(i), h[i]) for i in known_flat]
    header = {
        "dims": [int(d) for d in grid.dims],
        "cell_size": grid.cell_size,
        "origin": [float(o) for o in grid.origin],
        "C": grid.num_categories,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(serialize_map(cells, grid.n_labels))


def load_snapshot(path: str | Path) -> SemanticGrid:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    grid = SemanticGrid(
        header["dims"], header["cell_size"], header["origin"], header["C"]
    )
    n_labels, cells = deserialize_map(raw[nl + 1 :])
    if n_labels != grid.n_labels:
        raise ValueError("snapshot class count does not match its header")
    if cells:
        idx = np.array([c[0] for c in cells])
        vals = np.stack([c[1] for c in cells])
        grid.h.reshape(-1, grid.n_labels)[idx] = vals
    return grid
