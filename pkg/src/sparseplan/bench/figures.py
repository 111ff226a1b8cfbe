"""Figure rendering for benchmark outputs.

Every CSV the harness emits gets a PNG sibling so results are viewable
without extra tooling: convergence curves on log-x iteration axes,
phase-grid heatmaps colored by normalized cost, and tree renders over
two state dimensions with obstacles and the goal region when the
projection is the workspace.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection
from matplotlib.patches import Circle, Rectangle

from ..environments import Box, Environment, Sphere, VerticalCylinder
from ..planners import PlannerTree
from .metrics import MetricsRow
from .phase import PhaseGrid

__all__ = [
    "plot_cost_curves",
    "plot_node_counts",
    "plot_phase_grid",
    "plot_tree",
    "plot_sweep_heatmap",
]


def _mean_curves(rows: Sequence[MetricsRow], value) -> dict[str, tuple[list, list]]:
    """Per-planner (iterations, mean values) over seeds at shared milestones."""
    by_planner: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        v = value(row)
        if v is not None:
            by_planner[row.planner][row.iteration].append(v)
    curves = {}
    for planner, per_iter in by_planner.items():
        iters = sorted(per_iter)
        curves[planner] = (iters, [float(np.mean(per_iter[i])) for i in iters])
    return curves


def plot_cost_curves(rows: Sequence[MetricsRow], path: str | Path,
                     which: str = "best") -> Path:
    """Render mean cost against iterations (log x) per planner.

    which = "best" plots the best solution cost (rows without a solution
    are skipped); "avg" plots the mean cost over all tree nodes.
    """
    if which == "best":
        value = lambda r: r.best_cost
        ylabel = "best solution cost (s)"
    elif which == "avg":
        value = lambda r: r.avg_cost
        ylabel = "average node cost (s)"
    else:
        raise ValueError(f"which must be 'best' or 'avg', got {which!r}")
    curves = _mean_curves(rows, value)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for planner in sorted(curves):
        iters, vals = curves[planner]
        ax.plot(iters, vals, marker="o", markersize=3, label=planner)
    ax.set_xscale("log")
    ax.set_xlabel("iterations")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if curves:
        ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_node_counts(rows: Sequence[MetricsRow], path: str | Path) -> Path:
    """Render mean total node count against iterations per planner."""
    curves = _mean_curves(rows, lambda r: float(r.nodes))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for planner in sorted(curves):
        iters, vals = curves[planner]
        ax.plot(iters, vals, marker="o", markersize=3, label=planner)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iterations")
    ax.set_ylabel("tree nodes")
    ax.grid(True, alpha=0.3)
    if curves:
        ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_phase_grid(grid: PhaseGrid, path: str | Path,
                    title: str | None = None) -> Path:
    """Render a phase grid as a heatmap of cost / normalization.

    Unexplored cells render in a distinct dark background color.
    """
    values = grid.cells / grid.normalization
    masked = np.ma.masked_invalid(values)
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("#14143c")
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(
        masked, origin="lower", aspect="auto", cmap=cmap, vmin=0.0, vmax=1.0,
        extent=(grid.lo[1], grid.hi[1], grid.lo[0], grid.hi[0]),
    )
    ax.set_xlabel(f"state dim {grid.dims[1]}")
    ax.set_ylabel(f"state dim {grid.dims[0]}")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="cost / normalization")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _draw_environment(ax, env: Environment, dims: tuple[int, int]) -> None:
    """Obstacles and goal drawn only for the leading-workspace projection."""
    if tuple(dims) != (0, 1):
        return
    for obstacle in env.obstacles:
        if isinstance(obstacle, Box):
            lo, hi = obstacle.lo, obstacle.hi
            ax.add_patch(Rectangle((lo[0], lo[1]), hi[0] - lo[0], hi[1] - lo[1],
                                   color="#888888", alpha=0.8, zorder=1))
        elif isinstance(obstacle, Sphere):
            ax.add_patch(Circle((obstacle.center[0], obstacle.center[1]),
                                obstacle.radius, color="#888888", alpha=0.8,
                                zorder=1))
        elif isinstance(obstacle, VerticalCylinder):
            ax.add_patch(Circle((obstacle.cx, obstacle.cy), obstacle.radius,
                                color="#888888", alpha=0.8, zorder=1))
    goal = env.goal
    if len(goal.center) >= 2:
        ax.add_patch(Circle((goal.center[0], goal.center[1]), goal.radius,
                            fill=False, color="#d62728", linewidth=1.5,
                            zorder=3))
    ax.plot([env.start[0]], [env.start[1]], marker="*", markersize=10,
            color="#2ca02c", zorder=3)


def plot_tree(tree: PlannerTree, path: str | Path,
              dims: tuple[int, int] | None = None,
              solution: np.ndarray | None = None) -> Path:
    """Render tree edges over two state dimensions; optionally overlay a
    solution path's states."""
    system = tree.system
    if dims is None:
        dims = tuple(system.phase_dims)
    d0, d1 = dims
    segments = []
    for node in tree.nodes.values():
        if node.parent is None:
            continue
        p = tree.nodes[node.parent].state
        segments.append(((p[d0], p[d1]), (node.state[d0], node.state[d1])))
    fig, ax = plt.subplots(figsize=(5.6, 5.2))
    if segments:
        ax.add_collection(LineCollection(segments, colors="#1f77b4",
                                         linewidths=0.5, alpha=0.6, zorder=2))
    _draw_environment(ax, tree.env, dims)
    if solution is not None and len(solution):
        ax.plot(solution[:, d0], solution[:, d1], color="#ff7f0e",
                linewidth=2.0, zorder=4)
    ax.set_xlabel(f"state dim {d0}")
    ax.set_ylabel(f"state dim {d1}")
    ax.set_title(f"{tree.planner}: {tree.n_nodes} nodes")
    ax.autoscale()
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_sweep_heatmap(cells, path: str | Path, field: str = "fc_mean") -> Path:
    """Render a radius-sweep summary as a labeled heatmap."""
    ds_values = sorted({c.delta_s for c in cells})
    dbn_values = sorted({c.delta_bn for c in cells})
    grid = np.full((len(ds_values), len(dbn_values)), np.nan)
    for c in cells:
        grid[ds_values.index(c.delta_s), dbn_values.index(c.delta_bn)] = getattr(c, field)
    fig, ax = plt.subplots(figsize=(6.0, 4.6))
    masked = np.ma.masked_invalid(grid)
    cmap = plt.get_cmap("magma").copy()
    cmap.set_bad("#dddddd")
    im = ax.imshow(masked, origin="lower", cmap=cmap, aspect="auto")
    ax.set_xticks(range(len(dbn_values)), [f"{v:g}" for v in dbn_values])
    ax.set_yticks(range(len(ds_values)), [f"{v:g}" for v in ds_values])
    ax.set_xlabel("selection radius")
    ax.set_ylabel("pruning radius")
    for i in range(len(ds_values)):
        for j in range(len(dbn_values)):
            if not math.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                        fontsize=8, color="white")
    fig.colorbar(im, ax=ax, label=field)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
