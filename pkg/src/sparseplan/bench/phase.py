"""Phase-plane cost grids and tree-edge dumps.

A phase grid rasterizes a finished planner tree over two chosen state
dimensions: each cell holds the minimum cost-from-root over the tree
nodes that fall inside it, nan where no node landed.  Angular dimensions
are folded into (-pi, pi] before binning so long swing-up paths map onto
one revolution.  The normalization constant is carried as metadata for
renderers that map cost to color; cell values themselves stay raw.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..planners import PlannerTree
from ..systems import wrap_angles

__all__ = ["PhaseGrid", "phase_grid_from_tree", "emit_phase_grid",
           "read_phase_grid", "write_tree_edges", "default_normalization"]


def default_normalization(planner: str) -> float:
    """Cost-to-color scale used by the figure renderer: the plain
    nearest-neighbor baseline explores costlier nodes, so it gets a wider
    scale; every other planner shares the tighter one."""
    return 20.0 if planner == "rrt" else 10.0


@dataclass
class PhaseGrid:
    """Best-cost raster over two state dimensions."""

    dims: tuple[int, int]
    resolution: int
    lo: np.ndarray            # lower bounds of the two dims
    hi: np.ndarray
    cells: np.ndarray         # (resolution, resolution), nan = unexplored
    normalization: float

    @property
    def populated(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.cells)))


def _project(tree: PlannerTree, dims: tuple[int, int]) -> np.ndarray:
    """Node states projected to the two dims, angles folded into range."""
    states = np.array([n.state for n in tree.nodes.values()])
    wraps = tree.system.wraps
    cols = []
    for d in dims:
        col = states[:, d]
        if wraps[d]:
            col = wrap_angles(col[:, None], np.array([True]))[:, 0]
        cols.append(col)
    return np.column_stack(cols)


def phase_grid_from_tree(tree: PlannerTree, dims: tuple[int, int] | None = None,
                         resolution: int = 100,
                         normalization: float | None = None) -> PhaseGrid:
    """Rasterize a tree's node costs over two state dimensions.

    dims defaults to the system's designated phase pair; normalization
    defaults by planner (see default_normalization).
    """
    system = tree.system
    if dims is None:
        dims = tuple(system.phase_dims)
    d0, d1 = dims
    if not (0 <= d0 < system.d and 0 <= d1 < system.d and d0 != d1):
        raise ValueError(f"invalid phase dims {dims} for {system.name}")
    if resolution < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    if normalization is None:
        normalization = default_normalization(tree.planner)

    lo = np.array([-math.pi if system.wraps[d] else system.state_lo[d]
                   for d in dims])
    hi = np.array([math.pi if system.wraps[d] else system.state_hi[d]
                   for d in dims])
    span = hi - lo
    cells = np.full((resolution, resolution), np.nan)
    projected = _project(tree, dims)
    costs = np.array([n.cost for n in tree.nodes.values()])
    idx = np.clip(((projected - lo) / span * resolution).astype(int),
                  0, resolution - 1)
    for (r, c), cost in zip(idx, costs):
        cur = cells[r, c]
        if math.isnan(cur) or cost < cur:
            cells[r, c] = cost
    return PhaseGrid(dims=dims, resolution=resolution, lo=lo, hi=hi,
                     cells=cells, normalization=float(normalization))


def emit_phase_grid(tree: PlannerTree, path: str | Path,
                    dims: tuple[int, int] | None = None,
                    resolution: int = 100,
                    normalization: float | None = None) -> PhaseGrid:
    """Build a phase grid and write it as CSV.

    Leading '#' lines carry the metadata (dims, resolution, bounds,
    normalization); data rows are row, col, cost for populated cells.
    """
    grid = phase_grid_from_tree(tree, dims, resolution, normalization)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# dims: {grid.dims[0]} {grid.dims[1]}\n")
        fh.write(f"# resolution: {grid.resolution}\n")
        fh.write(f"# lo: {float(grid.lo[0])!r} {float(grid.lo[1])!r}\n")
        fh.write(f"# hi: {float(grid.hi[0])!r} {float(grid.hi[1])!r}\n")
        fh.write(f"# normalization: {grid.normalization!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "cost"])
        rows, cols = np.nonzero(~np.isnan(grid.cells))
        for r, c in zip(rows, cols):
            writer.writerow([int(r), int(c), repr(float(grid.cells[r, c]))])
    return grid


def read_phase_grid(path: str | Path) -> PhaseGrid:
    """Parse a grid CSV written by emit_phase_grid (exact round-trip)."""
    meta: dict[str, str] = {}
    data_lines: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            else:
                data_lines.append(line)
    dims = tuple(int(v) for v in meta["dims"].split())
    resolution = int(meta["resolution"])
    lo = np.array([float(v) for v in meta["lo"].split()])
    hi = np.array([float(v) for v in meta["hi"].split()])
    cells = np.full((resolution, resolution), np.nan)
    reader = csv.reader(data_lines)
    header = next(reader)
    if header != ["row", "col", "cost"]:
        raise ValueError(f"{path}: unexpected phase-grid header {header}")
    for rec in reader:
        cells[int(rec[0]), int(rec[1])] = float(rec[2])
    return PhaseGrid(dims=dims, resolution=resolution, lo=lo, hi=hi,
                     cells=cells, normalization=float(meta["normalization"]))


def write_tree_edges(tree: PlannerTree, path: str | Path,
                     dims: tuple[int, int] | None = None) -> Path:
    """Dump tree edges as segments in two state dimensions.

    One CSV row per edge: parent and child coordinates plus the child's
    cost, enough for external polyline rendering of the tree.
    """
    system = tree.system
    if dims is None:
        dims = tuple(system.phase_dims)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d0, d1 = dims
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0", "y0", "x1", "y1", "cost"])
        for node in tree.nodes.values():
            if node.parent is None:
                continue
            p = tree.nodes[node.parent].state
            writer.writerow([repr(float(p[d0])), repr(float(p[d1])),
                             repr(float(node.state[d0])),
                             repr(float(node.state[d1])),
                             repr(float(node.cost))])
    return path
