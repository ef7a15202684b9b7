"""Vectorized voxel traversal (Amanatides-Woo stepping, all rays in lockstep).

Rays carry per-ray origins (or one shared origin), unit directions and range
limits, and walk the grid cell-by-cell. Cells are emitted in visit order
together with the distance at which the ray entered them; a ray ends when it
reaches its range limit (the endpoint lies in the last emitted cell), leaves
the grid, or steps onto a cell of the optional stop mask (that cell is still
emitted).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["END_RANGE", "END_HIT", "END_EXIT", "RayTraversal", "traverse_grid"]

END_RANGE = 0  # range limit reached; endpoint is inside the last cell
END_HIT = 1  # stopped on a stop-mask cell
END_EXIT = 2  # left the grid


@dataclass
class RayTraversal:
    ray_ids: np.ndarray  # (M,) int, one entry per visited cell
    cells: np.ndarray  # (M, 3) int cell coordinates in visit order
    entry_t: np.ndarray  # (M,) distance along the ray at cell entry
    end_reason: np.ndarray  # (B,) END_* code per ray
    end_cell: np.ndarray  # (B, 3) last visited cell per ray
    end_t: np.ndarray  # (B,) entry distance of the last visited cell

    def flat_cells(self, dims: np.ndarray) -> np.ndarray:
        """Visited cells as flat C-order indices."""
        return np.ravel_multi_index(
            (self.cells[:, 0], self.cells[:, 1], self.cells[:, 2]), tuple(dims)
        )


def traverse_grid(
    origin: np.ndarray,
    dirs: np.ndarray,
    t_max: np.ndarray,
    dims,
    cell_size: float,
    grid_origin: np.ndarray,
    stop_mask: np.ndarray | None = None,
) -> RayTraversal:
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    n_rays = dirs.shape[0]
    origin = np.asarray(origin, dtype=float)
    origins = np.broadcast_to(np.atleast_2d(origin), (n_rays, 3))
    t_max = np.broadcast_to(np.asarray(t_max, dtype=float), (n_rays,)).copy()
    dims = np.asarray(dims, dtype=int)
    grid_origin = np.asarray(grid_origin, dtype=float)

    pos = (origins - grid_origin) / cell_size  # (n_rays, 3) in cell units
    if np.any(pos < 0.0) or np.any(pos >= dims):
        raise ValueError("ray origin lies outside the grid")

    cells = np.minimum(np.floor(pos).astype(int), dims - 1)

    step = np.sign(dirs).astype(int)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_delta = np.where(dirs != 0.0, cell_size / np.abs(dirs), np.inf)
        next_boundary = cells + (step > 0).astype(int)
        t_next = np.where(
            dirs != 0.0,
            (next_boundary - pos) * cell_size / dirs,
            np.inf,
        )

    active = np.ones(n_rays, dtype=bool)
    entry = np.zeros(n_rays)
    end_reason = np.full(n_rays, END_RANGE, dtype=np.int8)
    end_cell = cells.copy()
    end_t = np.zeros(n_rays)

    out_ids: list[np.ndarray] = []
    out_cells: list[np.ndarray] = []
    out_entry: list[np.ndarray] = []

    max_steps = int(dims.sum()) + 3
    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        out_ids.append(idx.copy())
        out_cells.append(cells[idx].copy())
        out_entry.append(entry[idx].copy())
        end_cell[idx] = cells[idx]
        end_t[idx] = entry[idx]

        if stop_mask is not None:
            hit = stop_mask[cells[idx, 0], cells[idx, 1], cells[idx, 2]]
            hit_idx = idx[hit]
            end_reason[hit_idx] = END_HIT
            active[hit_idx] = False
            idx = idx[~hit]
            if idx.size == 0:
                continue

        axis = np.argmin(t_next[idx], axis=1)
        t_cross = t_next[idx, axis]

        done = t_cross >= t_max[idx]
        end_reason[idx[done]] = END_RANGE
        active[idx[done]] = False
        idx = idx[~done]
        axis = axis[~done]
        t_cross = t_cross[~done]
        if idx.size == 0:
            continue

        cells[idx, axis] += step[idx, axis]
        entry[idx] = t_cross
        t_next[idx, axis] += t_delta[idx, axis]

        outside = (cells[idx] < 0).any(axis=1) | (cells[idx] >= dims).any(axis=1)
        out_idx = idx[outside]
        end_reason[out_idx] = END_EXIT
        active[out_idx] = False
        # clamp so end_cell stays the last in-grid cell for exited rays
        cells[out_idx] = np.clip(cells[out_idx], 0, dims - 1)

    if out_ids:
        ray_ids = np.concatenate(out_ids)
        visited = np.concatenate(out_cells)
        entries = np.concatenate(out_entry)
    else:
        ray_ids = np.empty(0, dtype=int)
        visited = np.empty((0, 3), dtype=int)
        entries = np.empty(0)
    return RayTraversal(ray_ids, visited, entries, end_reason, end_cell, end_t)
