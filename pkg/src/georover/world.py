"""Synthetic ground-truth semantic worlds and the range-category sensor.

A ``.world`` file is a single-line JSON header followed by one ASCII grid per
z-slice (slices separated by blank lines, bottom slice first). Each character
maps to a category through the header's palette; category 0 is free space.
Lines within a slice run from y = ny-1 down to y = 0 so the text reads like a
top-down map with +y up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .manifolds import Pose
from .raycast import END_HIT, traverse_grid

__all__ = [
    "WorldParseError",
    "GroundTruthWorld",
    "SensorParams",
    "SemanticRay",
    "ray_directions",
    "load_world",
    "dump_world",
    "sense",
]


class WorldParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class GroundTruthWorld:
    dims: np.ndarray  # (3,) cells
    cell_size: float
    origin: np.ndarray  # (3,) meters, position of the (0,0,0) cell corner
    labels: np.ndarray  # (nx, ny, nz) categories, 0 = free
    num_categories: int  # C: categories run 0..C

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels)
        if labels.min() < 0 or labels.max() > self.num_categories:
            raise ValueError("labels outside the category set")
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def contains(self, point: np.ndarray) -> bool:
        rel = (np.asarray(point, dtype=float) - self.origin) / self.cell_size
        return bool(np.all(rel >= 0.0) and np.all(rel < self.dims))

    def cell_center(self, cell) -> np.ndarray:
        return self.origin + (np.asarray(cell, dtype=float) + 0.5) * self.cell_size


@dataclass(frozen=True)
class SensorParams:
    """Regular angular grid of range-category rays (x forward, z up)."""

    horizontal_fov: float
    vertical_fov: float
    rays_h: int
    rays_v: int
    max_range: float
    range_noise_sigma: float = 0.0
    label_flip_prob: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.horizontal_fov <= 2 * np.pi and 0.0 < self.vertical_fov <= 2 * np.pi):
            raise ValueError("fields of view must lie in (0, 2*pi]")
        if self.max_range <= 0.0:
            raise ValueError("max range must be positive")
        if self.rays_h < 1 or self.rays_v < 1:
            raise ValueError("ray counts must be at least 1")
        if self.range_noise_sigma < 0.0 or not (0.0 <= self.label_flip_prob <= 1.0):
            raise ValueError("noise parameters out of range")

    @property
    def n_rays(self) -> int:
        return self.rays_h * self.rays_v

    @property
    def fov_diameter(self) -> float:
        """Diameter of the sensed region, used by the planner overlap radius."""
        return 2.0 * self.max_range


@dataclass(frozen=True)
class SemanticRay:
    """One sensor return: range in meters plus the category of the hit cell.

    Category 0 is never emitted for a hit (free space is inferred along the
    ray); a miss carries ``max_range_flag`` and contributes free-space
    evidence only.
    """

    range: float
    category: int
    max_range_flag: bool = False

    def __post_init__(self) -> None:
        if self.range < 0.0:
            raise ValueError("range must be nonnegative")
        if self.category == 0 and not self.max_range_flag:
            raise ValueError("category 0 is only valid on max-range rays")


def ray_directions(params: SensorParams) -> np.ndarray:
    """(B, 3) unit directions in the sensor frame on the FoV's angular grid."""

    def grid(fov: float, n: int) -> np.ndarray:
        if n == 1:
            return np.zeros(1)
        return np.linspace(-fov / 2.0, fov / 2.0, n)

    h = grid(params.horizontal_fov, params.rays_h)
    v = grid(params.vertical_fov, params.rays_v)
    hh, vv = np.meshgrid(h, v, indexing="ij")
    dirs = np.stack(
        [np.cos(vv) * np.cos(hh), np.cos(vv) * np.sin(hh), np.sin(vv)], axis=-1
    )
    return dirs.reshape(-1, 3)


def load_world(path: str | Path) -> GroundTruthWorld:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise WorldParseError("empty world file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise WorldParseError(f"bad JSON header: {exc.msg}", line=1, column=exc.colno) from exc
    for key in ("dims", "cell_size", "origin", "palette"):
        if key not in header:
            raise WorldParseError(f"header missing '{key}'", line=1)
    dims = np.asarray(header["dims"], dtype=int)
    if dims.shape != (3,) or np.any(dims < 1):
        raise WorldParseError("dims must be three positive integers", line=1)
    palette = {str(k): int(v) for k, v in header["palette"].items()}
    if any(len(k) != 1 for k in palette) or any(v < 0 for v in palette.values()):
        raise WorldParseError("palette keys must be single characters with labels >= 0", line=1)
    nx, ny, nz = (int(d) for d in dims)
    labels = np.zeros((nx, ny, nz), dtype=np.int16)

    row = 1  # 0-based index into lines; header consumed
    for z in range(nz):
        if row >= len(lines) or lines[row].strip() != "":
            raise WorldParseError(f"expected blank line before slice z={z}", line=row + 1)
        row += 1
        for y_line in range(ny):
            y = ny - 1 - y_line
            if row >= len(lines):
                raise WorldParseError(f"missing row for slice z={z}", line=row + 1)
            line = lines[row]
            if len(line) != nx:
                raise WorldParseError(
                    f"slice z={z} row has {len(line)} characters, expected {nx}",
                    line=row + 1,
                )
            for x, ch in enumerate(line):
                if ch not in palette:
                    raise WorldParseError(
                        f"character {ch!r} not in palette", line=row + 1, column=x + 1
                    )
                labels[x, y, z] = palette[ch]
            row += 1
    return GroundTruthWorld(
        dims=dims,
        cell_size=float(header["cell_size"]),
        origin=np.asarray(header["origin"], dtype=float),
        labels=labels,
        num_categories=max(palette.values()),
    )


def dump_world(world: GroundTruthWorld, path: str | Path, palette: dict[str, int]) -> None:
    """Writer matching :func:`load_world`; used to author fixtures."""
    inverse = {v: k for k, v in palette.items()}
    header = {
        "dims": [int(d) for d in world.dims],
        "cell_size": world.cell_size,
        "origin": [float(o) for o in world.origin],
        "palette": palette,
    }
    nx, ny, nz = (int(d) for d in world.dims)
    chunks = [json.dumps(header)]
    for z in range(nz):
        chunks.append("")
        for y in range(ny - 1, -1, -1):
            chunks.append("".join(inverse[int(world.labels[x, y, z])] for x in range(nx)))
    Path(path).write_text("\n".join(chunks) + "\n")


def sense(
    world: GroundTruthWorld,
    pose: Pose,
    params: SensorParams,
    rng: np.random.Generator,
) -> list[SemanticRay]:
    """Cast the sensor's ray grid through the ground truth.

    The first non-free cell along a ray yields its entry-face distance (plus
    clamped Gaussian noise) and its category (flipped to a uniformly random
    other category with the configured probability); rays without a hit
    within range come back flagged as max-range.
    """
    if not world.contains(pose.translation):
        raise ValueError("sensor pose outside the world bounds")
    dirs = ray_directions(params) @ pose.rotation.T
    trav = traverse_grid(
        pose.translation,
        dirs,
        np.full(dirs.shape[0], params.max_range),
        world.dims,
        world.cell_size,
        world.origin,
        stop_mask=world.labels > 0,
    )
    out: list[SemanticRay] = []
    categories = world.num_categories
    for b in range(dirs.shape[0]):
        if trav.end_reason[b] != END_HIT:
            out.append(SemanticRay(params.max_range, 0, True))
            continue
        r = float(trav.end_t[b])
        if params.range_noise_sigma > 0.0:
            r += params.range_noise_sigma * float(rng.normal())
        r = float(np.clip(r, 0.0, params.max_range))
        cat = int(world.labels[tuple(trav.end_cell[b])])
        if params.label_flip_prob > 0.0 and rng.uniform() < params.label_flip_prob:
            others = [c for c in range(1, categories + 1) if c != cat]
            if others:
                cat = int(others[int(rng.integers(0, len(others)))])
        out.append(SemanticRay(r, cat, False))
    return out
