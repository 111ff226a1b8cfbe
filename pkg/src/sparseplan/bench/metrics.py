"""Metric streams for planner runs.

A run emits one MetricsRow per milestone.  Milestones are geometrically
spaced iteration counts (1, 2, 4, ...) so that log-x convergence curves
come out evenly sampled, plus one terminal row at whatever iteration the
run stopped.  Rows round-trip through CSV exactly: floats are written
with repr so parsing an emitted file reproduces the in-memory rows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

__all__ = ["MetricsRow", "MetricsRecorder", "write_metrics", "read_metrics",
           "METRICS_HEADER"]


@dataclass(frozen=True)
class MetricsRow:
    """Snapshot of a planner run at one milestone."""

    planner: str
    system: str
    env: str
    seed: int
    iteration: int
    wall_s: float
    nodes: int
    active: int
    witnesses: int
    best_cost: float | None   # None until a solution exists
    avg_cost: float           # mean cost-from-root over all tree nodes


METRICS_HEADER = tuple(f.name for f in fields(MetricsRow))


class MetricsRecorder:
    """Planner observer that collects MetricsRow snapshots.

    Pass an instance as the planner's observer; it snapshots at every
    power-of-two iteration.  Call finalize(tree, elapsed) after the run
    to append the terminal row.  With record_timing False all wall times
    are written as 0.0, which makes the emitted CSV a pure function of
    config and seed (used by the determinism checks).
    """

    def __init__(self, planner: str, system: str, env: str, seed: int,
                 record_timing: bool = True) -> None:
        self.planner = planner
        self.system = system
        self.env = env
        self.seed = seed
        self.record_timing = record_timing
        self.rows: list[MetricsRow] = []
        self.last_elapsed = 0.0
        # (iteration, wall seconds, cost) at the first solution, or None.
        self.first_solution: tuple[int, float, float] | None = None

    def _snapshot(self, tree, iteration: int, elapsed: float) -> MetricsRow:
        best = tree.best_solution
        return MetricsRow(
            planner=self.planner,
            system=self.system,
            env=self.env,
            seed=self.seed,
            iteration=iteration,
            wall_s=float(elapsed) if self.record_timing else 0.0,
            nodes=tree.n_nodes,
            active=tree.n_active,
            witnesses=tree.n_witnesses,
            best_cost=None if best is None else float(best.cost),
            avg_cost=tree.average_node_cost(),
        )

    def __call__(self, tree, iteration: int, elapsed: float) -> None:
        self.last_elapsed = elapsed
        if self.first_solution is None and tree.best_solution is not None:
            self.first_solution = (
                iteration,
                float(elapsed) if self.record_timing else 0.0,
                float(tree.best_solution.cost),
            )
        # Power-of-two milestone test without a lookup table.
        if iteration > 0 and (iteration & (iteration - 1)) == 0:
            self.rows.append(self._snapshot(tree, iteration, elapsed))

    def finalize(self, tree, elapsed: float | None = None) -> None:
        """Append the terminal row (skipped if the last milestone already
        covers the final iteration).  Without an explicit elapsed the last
        observed loop time is used, keeping file emission out of the
        measured wall time."""
        if elapsed is None:
            elapsed = self.last_elapsed
        if self.rows and self.rows[-1].iteration == tree.iterations:
            return
        self.rows.append(self._snapshot(tree, tree.iterations, elapsed))


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics(rows: Iterable[MetricsRow], path: str | Path) -> Path:
    """Write rows as UTF-8 CSV with a header; floats use repr for exact
    round-trips."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in rows:
            writer.writerow([_format_value(getattr(row, name))
                             for name in METRICS_HEADER])
    return path


def read_metrics(path: str | Path) -> list[MetricsRow]:
    """Parse a metrics CSV back into rows (inverse of write_metrics)."""
    out: list[MetricsRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected metrics header {header}")
        for rec in reader:
            vals = dict(zip(METRICS_HEADER, rec))
            out.append(MetricsRow(
                planner=vals["planner"],
                system=vals["system"],
                env=vals["env"],
                seed=int(vals["seed"]),
                iteration=int(vals["iteration"]),
                wall_s=float(vals["wall_s"]),
                nodes=int(vals["nodes"]),
                active=int(vals["active"]),
                witnesses=int(vals["witnesses"]),
                best_cost=None if vals["best_cost"] == "" else float(vals["best_cost"]),
                avg_cost=float(vals["avg_cost"]),
            ))
    return out
