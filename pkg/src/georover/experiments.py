"""Scenario runner and metrics pipeline.

Drives tick-stepped multi-robot exploration: sense, integrate, periodic map
exchange and consensus, ledger-gossip-triggered joint planning rounds, A*
trajectory extraction, kinematic motion (one cell per tick), and per-tick
per-robot metrics. After the tick budget the robots return to their start
cells and a consensus-only epoch runs until the map discrepancy collapses.
Also hosts the two-agent circle eigenvector demonstration.

Everything is deterministic per seed: robots are stepped in index order, all
randomness flows from per-robot generators, and published map deltas are
serialized in sorted cell order.
"""

from __future__ import annotations

import json
import struct
from collections import deque
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .consensus import (
    CommGraph,
    JointState,
    StepSchedule,
    aggregate_distance,
    alg1_iterate,
    eigenvector_local_gradient,
    leading_eigenvector,
)
from .manifolds import SE3, Circle, MetricWeights, Pose, circle_point
from .mapping import (
    FREE,
    UNKNOWN,
    InverseModelParams,
    SemanticGrid,
    frontier_viewpoints,
    integrate_pointcloud,
    map_consensus_step,
    map_discrepancy,
    ml_project_2d,
    normalized_entropy,
    save_snapshot,
)
from .netsim import (
    LinkSchedule,
    Network,
    Topology,
    build_topology,
    deserialize_map_arrays,
    deserialize_plan,
    serialize_map_arrays,
    serialize_plan,
)
from .planner import (
    Ledger,
    MapSnapshot,
    PlannerParams,
    TeamPlan,
    astar_trajectory,
    ledger_sync,
    plan_consensus_step,
    plan_discrepancy,
    plan_local_gradient,
)
from .world import SensorParams, load_world, ray_directions, sense

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "MetricsRecord",
    "ScenarioResult",
    "run_scenario",
    "emit_metrics",
    "EigenDemoResult",
    "run_eigen_demo",
]

METRICS_HEADER = "tick,robot,coverage_m2,h_norm,phi_map,phi_plan,bytes_tx,bytes_rx,distance_m"

_LEDGER_MAGIC = b"RLDG"


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid scenario config:\n" + "\n".join(f"- {e}" for e in errors))
        self.errors = errors


@dataclass
class ScenarioConfig:
    """Complete experiment description; defaults follow the reference
    parameter set (steps 0.1, harmonic local schedules, overlap radius 20 m,
    sample radius 16 m, horizon 5, 20 planning rounds, 0.2 m cells)."""

    world: str
    n_robots: int
    start_cells: list[tuple[int, int]]
    start_yaws: list[float] | None = None
    topology_kind: str = "full"
    teams: list[list[int]] | None = None
    mode: str = "collaborative"
    seed: int = 0
    ticks: int = 2000
    out_dir: str = "out"
    traversable: tuple[int, ...] = (1,)
    robot_z_layer: int | None = None

    sensor: SensorParams = field(
        default_factory=lambda: SensorParams(1.6, 2.8, 11, 7, max_range=2.0)
    )
    planning_sensor: SensorParams | None = None
    inverse_model: InverseModelParams = field(default_factory=InverseModelParams)
    eps_m: float = 0.1
    alpha_m_a: float = 1.0  # alpha_m^(k) = a/(k+1)
    normalize_evidence: bool = True
    planner: PlannerParams = field(default_factory=lambda: PlannerParams(ground_plane=True))

    t_pub_m: int = 5
    t_int_m: int = 5
    t_pub_p: int = 1
    thresh_p: float = 0.4
    link_outages: list[dict] = field(default_factory=list)
    final_phi_tol: float = 1e-8
    final_max_rounds: int = 10_000

    def __post_init__(self) -> None:
        if self.start_yaws is None:
            self.start_yaws = [0.0] * self.n_robots
        # mode invariants are enforced, not merely checked
        if self.mode == "egocentric":
            self.planner = _replace_params(self.planner, eps_p=0.0, gamma_q=0.0)
        if self.mode == "frontier":
            self.planner = _replace_params(self.planner, k_p=0)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        raw = json.loads(Path(path).read_text())
        return cls.from_dict(raw, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ScenarioConfig":
        raw = dict(raw)
        if base_dir is not None and "world" in raw:
            world = Path(raw["world"])
            if not world.is_absolute():
                raw["world"] = str((base_dir / world).resolve())
        kwargs: dict = {}
        topo = raw.pop("topology", None)
        if topo:
            kwargs["topology_kind"] = topo.get("kind", "full")
            kwargs["teams"] = topo.get("teams")
        if "sensor" in raw:
            kwargs["sensor"] = SensorParams(**raw.pop("sensor"))
        if raw.get("planning_sensor") is not None:
            kwargs["planning_sensor"] = SensorParams(**raw.pop("planning_sensor"))
        else:
            raw.pop("planning_sensor", None)
        mapping = raw.pop("mapping", None)
        if mapping:
            kwargs["inverse_model"] = InverseModelParams(
                mapping.get("hit_confidence", 0.9), mapping.get("free_confidence", 0.7)
            )
            for key in ("eps_m", "alpha_m_a", "normalize_evidence"):
                if key in mapping:
                    kwargs[key] = mapping[key]
        if "planner" in raw:
            pl = dict(raw.pop("planner"))
            gamma = pl.pop("gamma_weights", None)
            if gamma is not None:
                pl["gamma_weights"] = MetricWeights(np.asarray(gamma, dtype=float))
            pl.setdefault("ground_plane", True)
            kwargs["planner"] = PlannerParams(**pl)
        cadence = raw.pop("cadence", None)
        if cadence:
            for key in ("t_pub_m", "t_int_m", "t_pub_p", "thresh_p"):
                if key in cadence:
                    kwargs[key] = cadence[key]
        if "start_cells" in raw:
            raw["start_cells"] = [tuple(c) for c in raw["start_cells"]]
        if "traversable" in raw:
            raw["traversable"] = tuple(raw["traversable"])
        known = {f.name for f in fields(cls)}
        for key, value in raw.items():
            if key not in known:
                raise ConfigError([f"unknown config key {key!r}"])
            kwargs[key] = value
        return cls(**kwargs)

    def validate(self) -> list[str]:
        """All problems at once; an empty list means the config is runnable."""
        errors: list[str] = []
        if not Path(self.world).exists():
            errors.append(f"world file {self.world!r} does not exist")
        if self.n_robots < 1:
            errors.append("n_robots must be at least 1")
        if len(self.start_cells) != self.n_robots:
            errors.append("start_cells must list one cell per robot")
        if len(self.start_yaws) != self.n_robots:
            errors.append("start_yaws must list one yaw per robot")
        if self.mode not in ("collaborative", "egocentric", "frontier"):
            errors.append(f"unknown mode {self.mode!r}")
        if self.topology_kind not in ("full", "hierarchical", "ring"):
            errors.append(f"unknown topology {self.topology_kind!r}")
        if self.topology_kind == "hierarchical":
            if not self.teams:
                errors.append("hierarchical topology needs teams")
            else:
                members = sorted(m for t in self.teams for m in t)
                if members != list(range(self.n_robots)):
                    errors.append("teams must partition the robots")
        if not (0.0 < self.eps_m <= 1.0):
            errors.append("eps_m must lie in (0, 1] (flat-map consensus step)")
        if self.alpha_m_a <= 0.0:
            errors.append("alpha_m_a must be positive")
        if self.ticks < 0:
            errors.append("tick budget must be nonnegative")
        for key in ("t_pub_m", "t_int_m", "t_pub_p"):
            if getattr(self, key) < 1:
                errors.append(f"{key} must be at least 1")
        if not (0.0 < self.thresh_p <= 1.0):
            errors.append("thresh_p must lie in (0, 1]")
        for out in self.link_outages:
            if "edge" not in out or "down" not in out or "up" not in out:
                errors.append(f"malformed link outage entry {out!r}")
            elif out["down"] >= out["up"]:
                errors.append(f"empty outage interval in {out!r}")
        return errors


def _replace_params(params: PlannerParams, **over) -> PlannerParams:
    kwargs = {
        "eps_p": params.eps_p,
        "alpha_a": params.alpha_a,
        "gamma_c": params.gamma_c,
        "gamma_q": params.gamma_q,
        "xi_max": params.xi_max,
        "fov_diameter": params.fov_diameter,
        "d_q": params.d_q,
        "horizon": params.horizon,
        "k_p": params.k_p,
        "gamma_weights": params.gamma_weights,
        "ground_plane": params.ground_plane,
        "literal_info_term": params.literal_info_term,
    }
    kwargs.update(over)
    return PlannerParams(**kwargs)


@dataclass
class MetricsRecord:
    tick: int
    robot: int
    coverage_m2: float
    h_norm: float
    phi_map: float
    phi_plan: float
    bytes_tx: int
    bytes_rx: int
    distance_traveled_m: float


def emit_metrics(records: list[MetricsRecord], path: str | Path) -> None:
    """Fixed-header CSV with floats at nine significant digits."""
    lines = [METRICS_HEADER]
    for r in records:
        lines.append(
            f"{r.tick},{r.robot},{r.coverage_m2:.9g},{r.h_norm:.9g},"
            f"{r.phi_map:.9g},{r.phi_plan:.9g},{r.bytes_tx},{r.bytes_rx},"
            f"{r.distance_traveled_m:.9g}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _pack_ledger(ledger: Ledger) -> bytes:
    return (
        _LEDGER_MAGIC
        + struct.pack("<H", ledger.flags.size)
        + ledger.flags.astype(np.uint8).tobytes()
    )


def _unpack_ledger(data: bytes, owner: int) -> Ledger:
    if data[:4] != _LEDGER_MAGIC:
        raise ValueError("bad ledger payload")
    (n,) = struct.unpack_from("<H", data, 4)
    flags = np.frombuffer(data, dtype=np.uint8, count=n, offset=6).astype(bool)
    return Ledger(flags, owner)


class _Robot:
    def __init__(self, idx: int, pose: Pose, grid: SemanticGrid, rng, n_robots: int):
        self.idx = idx
        self.pose = pose
        self.start_pose = pose
        self.grid = grid
        self.rng = rng
        self.mirrors: dict[int, np.ndarray] = {}
        self.fresh: set[int] = set()
        self.pending: dict[int, set[int]] = {}
        self.plan: TeamPlan | None = None
        self.path: deque[Pose] = deque()
        self.ledger = Ledger.empty(n_robots, idx)
        self.prev_plan_done = True
        self.exploration_done = False
        self.distance = 0.0
        self.known_cols: np.ndarray = np.zeros(tuple(grid.dims[:2]), dtype=bool)
        self.peer_poses: dict[int, Pose] = {}
        self.plan_buffer: dict[int, TeamPlan] = {}


@dataclass
class ScenarioResult:
    metrics_path: Path
    envelope_path: Path
    snapshot_paths: list[Path]
    final_phi_map: float
    ticks_run: int
    plan_consensus_steps: int
    map_consensus_rounds: int
    records: list[MetricsRecord]


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    errors = config.validate()
    if errors:
        raise ConfigError(errors)
    world = load_world(config.world)
    n = config.n_robots
    if n == 1:
        graph = CommGraph.metropolis(1, [])
        net = None
    else:
        topo = Topology(
            config.topology_kind,
            n,
            teams=tuple(tuple(t) for t in config.teams) if config.teams else None,
        )
        graph = build_topology(topo)
        outages = {}
        for out in config.link_outages:
            outages.setdefault(tuple(out["edge"]), []).append((out["down"], out["up"]))
        net = Network(graph, LinkSchedule(outages), delay=0)

    z_layer = config.robot_z_layer
    if z_layer is None:
        z_layer = 1 if world.dims[2] > 1 else 0
    robot_z = float(world.origin[2] + (z_layer + 0.5) * world.cell_size)

    sensor = config.sensor
    plan_sensor = config.planning_sensor or sensor
    dirs = ray_directions(sensor)
    inv = config.inverse_model
    inv.validate(world.num_categories)
    alpha_m = lambda k: config.alpha_m_a / (k + 1.0)
    traversable = set(config.traversable)
    params = config.planner
    manifold = SE3(params.gamma_weights)

    robots: list[_Robot] = []
    for i in range(n):
        cx, cy = config.start_cells[i]
        pose = Pose.from_xy_yaw(
            world.origin[0] + (cx + 0.5) * world.cell_size,
            world.origin[1] + (cy + 0.5) * world.cell_size,
            config.start_yaws[i],
            z=robot_z,
        )
        grid = SemanticGrid(
            world.dims,
            world.cell_size,
            world.origin,
            world.num_categories,
            normalize_evidence=config.normalize_evidence,
        )
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, i)))
        robots.append(_Robot(i, pose, grid, rng, n))
    for r in robots:
        for other in robots:
            if other.idx != r.idx:
                r.peer_poses[other.idx] = other.pose  # start poses are known

    records: list[MetricsRecord] = []
    plan_consensus_steps = 0
    map_consensus_rounds = 0
    cell_area = world.cell_size**2

    def phi_map_now() -> float:
        if n < 2:
            return 0.0
        return map_discrepancy([r.grid for r in robots], graph)

    def phi_plan_now() -> float:
        if n < 2:
            return 0.0
        plans = [r.plan for r in robots]
        if any(p is None for p in plans):
            return 0.0
        return plan_discrepancy(plans, graph, params.gamma_weights)

    def emit_rows(tick: int) -> None:
        phi_m = phi_map_now()
        phi_p = phi_plan_now()
        for r in robots:
            # covered area: columns ever classified (latched so the metric is
            # monotone by construction)
            r.known_cols |= ml_project_2d(r.grid, traversable) != UNKNOWN
            records.append(
                MetricsRecord(
                    tick=tick,
                    robot=r.idx,
                    coverage_m2=float(r.known_cols.sum() * cell_area),
                    h_norm=normalized_entropy(r.grid),
                    phi_map=phi_m,
                    phi_plan=phi_p,
                    bytes_tx=int(net.ledger.tx[r.idx]) if net else 0,
                    bytes_rx=int(net.ledger.rx[r.idx]) if net else 0,
                    distance_traveled_m=r.distance,
                )
            )

    def publish_maps(tick: int) -> None:
        for r in robots:
            drained = r.grid.drain_dirty()
            for j in graph.neighbors(r.idx):
                r.pending.setdefault(j, set()).update(drained)
            h_flat = r.grid.h_flat()
            for j in graph.neighbors(r.idx):
                cells = r.pending.get(j)
                if not cells:
                    continue
                ordered = np.fromiter(cells, dtype=np.int64)
                ordered.sort()
                payload = serialize_map_arrays(ordered, h_flat[ordered], r.grid.n_labels)
                if net.send(r.idx, j, "map", payload, tick):
                    cells.clear()

    def route_deliveries(tick: int) -> set[int]:
        """Apply deliveries; returns robots whose ledger sync fired a start."""
        triggered: set[int] = set()
        delivered = net.deliver(tick)
        for r in robots:
            for env in delivered[r.idx]:
                if env.kind == "map":
                    _, idx, vecs = deserialize_map_arrays(env.payload)
                    mirror = r.mirrors.setdefault(
                        env.src, np.zeros((r.grid.n_cells, r.grid.n_labels))
                    )
                    mirror[idx] = vecs
                    r.fresh.add(env.src)
                elif env.kind == "pose":
                    r.peer_poses[env.src] = deserialize_plan(env.payload)[0, 0]
                elif env.kind == "ledger":
                    incoming = _unpack_ledger(env.payload, r.idx)
                    r.ledger, start = ledger_sync(
                        r.ledger, incoming, False, r.prev_plan_done, config.thresh_p
                    )
                    if start and not r.exploration_done:
                        triggered.add(r.idx)
                # plan envelopes outside a planning phase carry no state
        return triggered

    def consensus_round() -> None:
        nonlocal map_consensus_rounds
        updates: list[np.ndarray | None] = []
        for r in robots:
            nbrs = [
                (graph.weights[r.idx, j], r.mirrors[j]) for j in sorted(r.fresh)
            ]
            if not nbrs:
                updates.append(None)
                continue
            updates.append(map_consensus_step(r.grid.h_flat(), nbrs, config.eps_m))
        for r, new in zip(robots, updates):
            r.fresh.clear()
            if new is None:
                continue
            h_flat = r.grid.h_flat()
            changed = np.nonzero(np.abs(new - h_flat).max(axis=1) > 0.0)[0]
            if changed.size:
                r.grid.set_h_flat(changed, new[changed])
            map_consensus_rounds += 1

    def initial_plan(r: _Robot, occ: np.ndarray) -> tuple[TeamPlan, bool]:
        rows = []
        own_complete = False
        for l in range(n):
            anchor = r.pose if l == r.idx else r.peer_poses.get(l, r.pose)
            res = frontier_viewpoints(
                occ, anchor, params.horizon, world.cell_size, world.origin, z=robot_z
            )
            if l == r.idx:
                own_complete = res.exploration_complete
            rows.append(res.poses)
        return TeamPlan.from_rows(rows), own_complete

    def apply_gradient(plan: TeamPlan, grads: np.ndarray, alpha: float) -> TeamPlan:
        out = plan.copy()
        for l in range(plan.n_agents):
            for t in range(plan.horizon):
                step = alpha * grads[l, t]
                if params.ground_plane:
                    step[2] = step[3] = step[4] = 0.0
                out.poses[l, t] = manifold.exp(plan.poses[l, t], step)
        return out

    def plan_phase(tick: int, planners: list[int]) -> None:
        nonlocal plan_consensus_steps
        plans: dict[int, TeamPlan] = {}
        snapshots: dict[int, MapSnapshot] = {}
        complete: dict[int, bool] = {}
        for i in planners:
            r = robots[i]
            snapshots[i] = MapSnapshot.from_grid(r.grid, traversable)
            plans[i], complete[i] = initial_plan(r, snapshots[i].occ2d)
        for k in range(params.k_p):
            buffered: dict[int, dict[int, TeamPlan]] = {i: {} for i in planners}
            if net is not None and params.eps_p > 0.0:
                for i in planners:
                    net.broadcast(i, "plan", serialize_plan(plans[i].poses), tick)
                delivered = net.deliver(tick)
                for i in planners:
                    for env in delivered[i]:
                        if env.kind == "plan" and env.src in plans:
                            buffered[i][env.src] = TeamPlan(deserialize_plan(env.payload))
            new_plans: dict[int, TeamPlan] = {}
            for i in planners:
                nbrs = [
                    (graph.weights[i, j], buffered[i][j]) for j in sorted(buffered[i])
                ]
                if params.eps_p > 0.0 and nbrs:
                    stepped = plan_consensus_step(
                        plans[i],
                        nbrs,
                        params.eps_p,
                        params.gamma_weights,
                        params.ground_plane,
                        cut_locus="perturb",
                    )
                    plan_consensus_steps += 1
                else:
                    stepped = plans[i].copy()
                grads = plan_local_gradient(stepped, i, snapshots[i], plan_sensor, params)
                new_plans[i] = apply_gradient(stepped, grads, params.alpha(k))
            plans = new_plans
        for i in planners:
            r = robots[i]
            r.plan = plans[i]
            if complete[i]:
                r.exploration_done = True
                r.prev_plan_done = True
                continue
            occ = snapshots[i].occ2d
            start_cell = (
                int((r.pose.translation[0] - world.origin[0]) / world.cell_size),
                int((r.pose.translation[1] - world.origin[1]) / world.cell_size),
            )
            if occ[start_cell] != FREE:
                # not enough self-evidence yet: turn in place and retry later
                r.path = deque(
                    [
                        Pose.from_xy_yaw(
                            r.pose.translation[0],
                            r.pose.translation[1],
                            r.pose.yaw() + np.pi / 2,
                            z=robot_z,
                        )
                    ]
                )
                r.prev_plan_done = False
                continue
            waypoints = [r.plan.poses[i, t] for t in range(params.horizon)]
            traj = astar_trajectory(
                occ, r.pose, waypoints, world.cell_size, world.origin, z=robot_z
            )
            r.path = deque(traj.poses)
            r.prev_plan_done = len(r.path) == 0

    # --- tick 0 row, then the main loop -------------------------------------
    emit_rows(0)
    tick = 0
    for tick in range(1, config.ticks + 1):
        for r in robots:
            cloud = sense(world, r.pose, sensor, r.rng)
            integrate_pointcloud(r.grid, r.pose, cloud, dirs, inv, alpha_m)
        if net is not None:
            if tick % config.t_pub_m == 0:
                publish_maps(tick)
            if tick % config.t_pub_p == 0:
                for r in robots:
                    pose_arr = np.empty((1, 1), dtype=object)
                    pose_arr[0, 0] = r.pose
                    net.broadcast(r.idx, "pose", serialize_plan(pose_arr), tick)
                    net.broadcast(r.idx, "ledger", _pack_ledger(r.ledger), tick)
            triggered = route_deliveries(tick)
            if tick % config.t_int_m == 0:
                consensus_round()
        else:
            triggered = (
                {0}
                if robots[0].prev_plan_done and not robots[0].exploration_done
                else set()
            )
        if triggered:
            plan_phase(tick, sorted(triggered))
        for r in robots:
            if r.path:
                nxt = r.path.popleft()
                r.distance += float(
                    np.linalg.norm(nxt.translation[:2] - r.pose.translation[:2])
                )
                r.pose = nxt
                if not r.path:
                    r.prev_plan_done = True
        emit_rows(tick)

    # --- return to base and final consensus-only epoch ----------------------
    for r in robots:
        r.pose = r.start_pose
    if net is not None:
        net.schedule = LinkSchedule()  # connectivity restored at base
        rounds = 0
        while phi_map_now() > config.final_phi_tol and rounds < config.final_max_rounds:
            tick += 1
            rounds += 1
            publish_maps(tick)
            route_deliveries(tick)
            consensus_round()
            emit_rows(tick)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.csv"
    emit_metrics(records, metrics_path)
    envelope_path = out_dir / "envelope.jsonl"
    if net is not None:
        net.export_log(envelope_path)
    else:
        envelope_path.write_text("")
    snapshot_paths = []
    for r in robots:
        snap_path = out_dir / f"robot{r.idx}.rmap"
        save_snapshot(r.grid, snap_path)
        snapshot_paths.append(snap_path)
    return ScenarioResult(
        metrics_path=metrics_path,
        envelope_path=envelope_path,
        snapshot_paths=snapshot_paths,
        final_phi_map=phi_map_now(),
        ticks_run=tick,
        plan_consensus_steps=plan_consensus_steps,
        map_consensus_rounds=map_consensus_rounds,
        records=records,
    )


@dataclass
class EigenDemoResult:
    trace_path: Path | None
    final_angle: float
    final_phi: float
    best_objective: float
    oracle_objective: float


def run_eigen_demo(
    n_points: int = 200,
    seed: int = 0,
    epsilon: float = 0.45,
    alpha_a: float = 0.05,
    max_iters: int = 20_000,
    out_dir: str | Path | None = None,
    split: int | None = None,
) -> EigenDemoResult:
    """Two agents ascend their private data's variance on the circle under a
    consensus constraint; both must land on the global leading eigenvector.

    Writes a per-iteration trace (disagreement, mean objective, worst angle
    to the centralized eigenvector) and raises if the final angle misses the
    1e-3 rad tolerance.
    """
    rng = np.random.default_rng(seed)
    spread = rng.normal(size=(n_points, 2)) @ np.diag([2.5, 0.4])
    angle = rng.uniform(0.0, np.pi)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    # fixed overall covariance scale (independent of the point count) so the
    # harmonic local schedule converges at the same rate for any n_points
    data = (spread @ rot.T) * np.sqrt(40.0 / n_points)
    if split is None:
        split = n_points // 2
    if not (0 < split < n_points):
        raise ConfigError(["split must partition the data rows"])
    blocks = [data[:split], data[split:]]
    v_star = leading_eigenvector(data)

    manifold = Circle()
    schedule = StepSchedule(epsilon, lambda k: alpha_a / (k + 1.0), family="harmonic")
    schedule.validate(manifold)  # epsilon >= 0.5 is a config error on the circle

    graph = CommGraph.metropolis(2, [(0, 1)])
    states = [circle_point(rng.uniform(-np.pi, np.pi)) for _ in range(2)]
    joint = JointState(manifold, states)

    def objective(state: JointState) -> float:
        return float(np.mean([np.dot(b @ x, b @ x) for b, x in zip(blocks, state.states)]))

    def worst_angle(state: JointState) -> float:
        return max(
            float(np.arccos(np.clip(abs(np.dot(x, v_star)), 0.0, 1.0)))
            for x in state.states
        )

    rows = []
    best = float("-inf")
    local_grads = lambda i, x: eigenvector_local_gradient(x, blocks[i])
    for k in range(max_iters):
        joint = alg1_iterate(joint, graph, schedule, k, local_grads)
        phi = aggregate_distance(joint, graph)
        f_val = objective(joint)
        best = max(best, f_val)
        if k % 10 == 0 or k == max_iters - 1:
            rows.append((k, phi, f_val, worst_angle(joint)))
    final_phi = aggregate_distance(joint, graph)
    final_angle = worst_angle(joint)

    trace_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / "eigen_trace.csv"
        lines = ["iter,phi,objective,angle"]
        for k, phi, f_val, ang in rows:
            lines.append(f"{k},{phi:.9g},{f_val:.9g},{ang:.9g}")
        trace_path.write_text("\n".join(lines) + "\n")

    # centralized optimum of the traced objective F = mean_i f_i at consensus
    oracle = float(np.dot(data @ v_star, data @ v_star)) / 2.0
    if final_angle > 1e-3:
        raise RuntimeError(
            f"eigenvector demo missed tolerance: final angle {final_angle:.3e} rad"
        )
    return EigenDemoResult(trace_path, final_angle, final_phi, best, oracle)
