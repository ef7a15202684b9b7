"""Deterministic discrete-time peer-to-peer network simulator.

Topology construction with Metropolis weights, per-edge outage schedules,
unbounded delivery queues with a fixed tick delay, byte accounting, and the
binary wire formats for map cells ('RMAP') and pose plans ('RPLN'). Outages
gate sends; envelopes already in flight still deliver. All little-endian.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import se3
from .consensus import CommGraph
from .manifolds import Pose

__all__ = [
    "WireFormatError",
    "Topology",
    "build_topology",
    "LinkSchedule",
    "Envelope",
    "BandwidthLedger",
    "Network",
    "serialize_map",
    "deserialize_map",
    "serialize_plan",
    "deserialize_plan",
]

ENVELOPE_KINDS = ("map", "plan", "ledger", "pose")

_MAP_MAGIC = b"RMAP"
_PLAN_MAGIC = b"RPLN"
_WIRE_VERSION = 1


class WireFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Named topology family: full mesh, ring, or teams-with-leaders."""

    kind: str
    n_agents: int
    teams: tuple[tuple[int, ...], ...] | None = None  # hierarchical only; first
    # member of each team is its leader

    def __post_init__(self) -> None:
        if self.kind not in ("full", "hierarchical", "ring"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.n_agents < 2:
            raise ValueError("need at least two agents")
        if self.kind == "hierarchical":
            if not self.teams:
                raise ValueError("hierarchical topology needs a team partition")
            teams = tuple(tuple(t) for t in self.teams)
            members = [m for t in teams for m in t]
            if sorted(members) != list(range(self.n_agents)):
                raise ValueError("teams must partition the agent set")
            if any(len(t) == 0 for t in teams):
                raise ValueError("empty team")
            object.__setattr__(self, "teams", teams)


def build_topology(topo: Topology) -> CommGraph:
    """Connected CommGraph with Metropolis weights for the named family."""
    n = topo.n_agents
    if topo.kind == "full":
        edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    elif topo.kind == "ring":
        edges = {(i, (i + 1) % n) for i in range(n)}
    else:
        edges = set()
        leaders = [t[0] for t in topo.teams]
        for team in topo.teams:
            leader = team[0]
            for member in team[1:]:
                edges.add((min(leader, member), max(leader, member)))
        for a in range(len(leaders)):
            for b in range(a + 1, len(leaders)):
                edges.add((min(leaders[a], leaders[b]), max(leaders[a], leaders[b])))
    return CommGraph.metropolis(n, edges)


def _edge(i: int, j: int) -> tuple[int, int]:
    return (min(i, j), max(i, j))


@dataclass(frozen=True)
class LinkSchedule:
    """Per-edge outage intervals [down_from, up_at): disjoint and ordered."""

    intervals: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        norm: dict[tuple[int, int], tuple[tuple[int, int], ...]] = {}
        for edge, spans in self.intervals.items():
            spans = tuple((int(a), int(b)) for a, b in spans)
            prev_end = None
            for a, b in spans:
                if b <= a:
                    raise ValueError(f"empty outage interval ({a}, {b})")
                if prev_end is not None and a < prev_end:
                    raise ValueError("outage intervals must be disjoint and ordered")
                prev_end = b
            norm[_edge(*edge)] = spans
        object.__setattr__(self, "intervals", norm)

    def is_up(self, i: int, j: int, tick: int) -> bool:
        for a, b in self.intervals.get(_edge(i, j), ()):
            if a <= tick < b:
                return False
        return True


@dataclass(frozen=True)
class Envelope:
    src: int
    dst: int
    kind: str
    payload: bytes
    sent_tick: int

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError("source and destination must differ")
        if self.kind not in ENVELOPE_KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")


class BandwidthLedger:
    """Cumulative per-agent byte counters plus per-tick deltas."""

    def __init__(self, n_agents: int):
        self.tx = np.zeros(n_agents, dtype=np.int64)
        self.rx = np.zeros(n_agents, dtype=np.int64)
        self.tx_deltas: dict[int, np.ndarray] = {}
        self.rx_deltas: dict[int, np.ndarray] = {}

    def _bump(self, table: dict, counters: np.ndarray, agent: int, tick: int, n: int):
        if tick not in table:
            table[tick] = np.zeros_like(counters)
        table[tick][agent] += n
        counters[agent] += n

    def record_tx(self, agent: int, tick: int, n: int) -> None:
        self._bump(self.tx_deltas, self.tx, agent, tick, n)

    def record_rx(self, agent: int, tick: int, n: int) -> None:
        self._bump(self.rx_deltas, self.rx, agent, tick, n)


class Network:
    """Single-clock message fabric over a CommGraph.

    Sends are gated by the outage schedule; queued envelopes deliver after a
    fixed per-edge tick delay in (sent_tick, src, dst) order.
    """

    def __init__(
        self,
        graph: CommGraph,
        schedule: LinkSchedule | None = None,
        delay: int = 0,
    ):
        if delay < 0:
            raise ValueError("delay must be nonnegative")
        self.graph = graph
        self.schedule = schedule if schedule is not None else LinkSchedule()
        self.delay = delay
        self.ledger = BandwidthLedger(graph.n_agents)
        self.pending: list[Envelope] = []
        self.envelope_log: list[dict] = []

    def link_up(self, i: int, j: int, tick: int) -> bool:
        if _edge(i, j) not in self.graph.edges:
            return False
        return self.schedule.is_up(i, j, tick)

    def send(self, src: int, dst: int, kind: str, payload: bytes, tick: int) -> bool:
        """Point-to-point send; silently dropped when the link is down."""
        if _edge(src, dst) not in self.graph.edges:
            raise ValueError(f"({src}, {dst}) is not an edge of the graph")
        if not self.schedule.is_up(src, dst, tick):
            return False
        env = Envelope(src, dst, kind, bytes(payload), tick)
        self.pending.append(env)
        self.ledger.record_tx(src, tick, len(env.payload))
        self.envelope_log.append(
            {"tick": tick, "src": src, "dst": dst, "kind": kind, "bytes": len(env.payload)}
        )
        return True

    def broadcast(self, agent: int, kind: str, payload: bytes, tick: int) -> int:
        """One envelope per currently-up incident edge; returns the count."""
        sent = 0
        for j in self.graph.neighbors(agent):
            if self.send(agent, j, kind, payload, tick):
                sent += 1
        return sent

    def deliver(self, tick: int) -> dict[int, list[Envelope]]:
        due = [e for e in self.pending if e.sent_tick + self.delay <= tick]
        self.pending = [e for e in self.pending if e.sent_tick + self.delay > tick]
        due.sort(key=lambda e: (e.sent_tick, e.src, e.dst))
        out: dict[int, list[Envelope]] = {i: [] for i in range(self.graph.n_agents)}
        for env in due:
            out[env.dst].append(env)
            self.ledger.record_rx(env.dst, tick, len(env.payload))
        return out

    def export_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.envelope_log:
                fh.write(json.dumps(rec) + "\n")


def _map_record_dtype(n_labels: int) -> np.dtype:
    return np.dtype([("idx", "<u4"), ("h", "<f8", (n_labels - 1,))])


def serialize_map(cells, n_labels: int) -> bytes:
    """Pack (cell index, log-odds vector) pairs; the leading log-odds entry
    is always zero and is omitted on the wire."""
    header = struct.pack("<4sHHI", _MAP_MAGIC, _WIRE_VERSION, n_labels, len(cells))
    if not cells:
        return header
    records = np.empty(len(cells), dtype=_map_record_dtype(n_labels))
    for k, (idx, vec) in enumerate(cells):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (n_labels,):
            raise WireFormatError(
                f"log-odds vector has shape {vec.shape}, expected ({n_labels},)"
            )
        if abs(vec[0]) > 1e-9:
            raise WireFormatError("first log-odds entry must be zero")
        records["idx"][k] = idx
        records["h"][k] = vec[1:]
    return header + records.tobytes()


def deserialize_map(data: bytes) -> tuple[int, list[tuple[int, np.ndarray]]]:
    """Inverse of :func:`serialize_map`; returns (n_labels, cells)."""
    if len(data) < 12:
        raise WireFormatError("truncated map header")
    magic, version, n_labels, count = struct.unpack_from("<4sHHI", data, 0)
    if magic != _MAP_MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != _WIRE_VERSION:
        raise WireFormatError(f"unsupported map format version {version}")
    stride = 4 + (n_labels - 1) * 8
    if len(data) != 12 + count * stride:
        raise WireFormatError("map payload length does not match the cell count")
    records = np.frombuffer(data, dtype=_map_record_dtype(n_labels), count=count, offset=12)
    vecs = np.zeros((count, n_labels))
    vecs[:, 1:] = records["h"]
    return int(n_labels), [(int(records["idx"][k]), vecs[k]) for k in range(count)]


def serialize_map_arrays(indices: np.ndarray, vectors: np.ndarray, n_labels: int) -> bytes:
    """Bulk form of :func:`serialize_map` for index/vector arrays."""
    indices = np.asarray(indices)
    vectors = np.asarray(vectors, dtype=float)
    if vectors.shape != (indices.size, n_labels):
        raise WireFormatError("vector block shape mismatch")
    if indices.size and np.max(np.abs(vectors[:, 0])) > 1e-9:
        raise WireFormatError("first log-odds entry must be zero")
    header = struct.pack("<4sHHI", _MAP_MAGIC, _WIRE_VERSION, n_labels, indices.size)
    records = np.empty(indices.size, dtype=_map_record_dtype(n_labels))
    records["idx"] = indices
    records["h"] = vectors[:, 1:]
    return header + records.tobytes()


def deserialize_map_arrays(data: bytes) -> tuple[int, np.ndarray, np.ndarray]:
    """Array form of :func:`deserialize_map`: (n_labels, indices, vectors)."""
    if len(data) < 12:
        raise WireFormatError("truncated map header")
    magic, version, n_labels, count = struct.unpack_from("<4sHHI", data, 0)
    if magic != _MAP_MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != _WIRE_VERSION:
        raise WireFormatError(f"unsupported map format version {version}")
    stride = 4 + (n_labels - 1) * 8
    if len(data) != 12 + count * stride:
        raise WireFormatError("map payload length does not match the cell count")
    records = np.frombuffer(data, dtype=_map_record_dtype(n_labels), count=count, offset=12)
    vecs = np.zeros((count, n_labels))
    vecs[:, 1:] = records["h"]
    return int(n_labels), records["idx"].astype(np.int64), vecs


def serialize_plan(poses) -> bytes:
    """Pack an agents x horizon pose array row-major as unit quaternion
    (w, x, y, z) plus translation, 56 bytes per pose."""
    poses = np.asarray(poses, dtype=object)
    if poses.ndim != 2:
        raise WireFormatError("plan must be a 2-D pose array")
    n_agents, horizon = poses.shape
    out = [struct.pack("<4sHHHH", _PLAN_MAGIC, _WIRE_VERSION, n_agents, horizon, 0)]
    for row in poses:
        for pose in row:
            q = se3.quat_from_rotation(pose.rotation)
            out.append(np.concatenate([q, pose.translation]).astype("<f8").tobytes())
    return b"".join(out)


def deserialize_plan(data: bytes) -> np.ndarray:
    if len(data) < 12:
        raise WireFormatError("truncated plan header")
    magic, version, n_agents, horizon, _ = struct.unpack_from("<4sHHHH", data, 0)
    if magic != _PLAN_MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != _WIRE_VERSION:
        raise WireFormatError(f"unsupported plan format version {version}")
    if len(data) != 12 + n_agents * horizon * 56:
        raise WireFormatError("plan payload length does not match the header")
    out = np.empty((n_agents, horizon), dtype=object)
    off = 12
    for i in range(n_agents):
        for t in range(horizon):
            vals = np.frombuffer(data, dtype="<f8", count=7, offset=off)
            q, trans = vals[:4], vals[4:]
            if abs(np.linalg.norm(q) - 1.0) > 1e-6:
                raise WireFormatError("non-unit quaternion in plan payload")
            out[i, t] = Pose(se3.polar_project(se3.rotation_from_quat(q)), trans)
            off += 56
    return out
