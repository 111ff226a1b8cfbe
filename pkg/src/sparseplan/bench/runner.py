"""Experiment drivers: single trials, multi-trial scenarios, the pruning
radius sweep, and the nearest-neighbor accuracy experiment.

A scenario is a named planner configuration plus a trial count; trial i
runs with seed base_seed + i so paired-seed comparisons across planners
line up.  Trials are independent and may run in worker processes.
"""

from __future__ import annotations

import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..environments import Environment, load_environment, make_environment
from ..nn import BruteForceIndex, NeighborGraph
from ..planners import PLANNER_NAMES, PlannerConfig, PlannerTree, run_planner
from ..systems import SYSTEM_NAMES, SystemModel, make_system
from .metrics import MetricsRecorder, MetricsRow

__all__ = [
    "ScenarioConfig",
    "SweepCell",
    "NNAccuracyReport",
    "resolve_environment",
    "run_trial",
    "run_scenario",
    "summarize_final_costs",
    "sweep_params",
    "write_sweep",
    "nn_accuracy_experiment",
]

_UNBOUNDED_ITERATIONS = 2 ** 62


@dataclass(frozen=True)
class ScenarioConfig:
    """One benchmark scenario: system, map, planner, radii, budget, trials.

    env is a builtin environment name or a path to an environment file.
    t_prop None uses the system default.  The budget is iterations,
    max_seconds, or both (whichever ends first).  Trial i uses seed
    base_seed + i.  record_timing False zeroes wall times in the metric
    stream so output depends only on config and seed.
    """

    system: str
    planner: str
    env: str | None = None
    delta_s: float = 0.5
    delta_bn: float = 1.0
    t_prop: float | None = None
    iterations: int | None = None
    max_seconds: float | None = None
    trials: int = 1
    seed: int = 0
    xi: float | None = None
    n0: int | None = None
    dt: float | None = None
    record_timing: bool = True
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.system not in SYSTEM_NAMES:
            raise ValueError(
                f"unknown system {self.system!r}; available: {', '.join(SYSTEM_NAMES)}"
            )
        if self.planner not in PLANNER_NAMES:
            raise ValueError(
                f"unknown planner {self.planner!r}; available: {', '.join(PLANNER_NAMES)}"
            )
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not (0.0 < self.delta_s < self.delta_bn):
            raise ValueError(
                f"need 0 < delta_s < delta_bn, got {self.delta_s}, {self.delta_bn}"
            )
        if self.t_prop is not None and self.t_prop <= 0:
            raise ValueError(f"t_prop must be positive, got {self.t_prop}")
        if self.iterations is None and self.max_seconds is None:
            raise ValueError("need a budget: iterations, max_seconds, or both")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError(f"iterations must be nonnegative, got {self.iterations}")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError(f"max_seconds must be positive, got {self.max_seconds}")

    def build_system(self) -> SystemModel:
        return make_system(self.system, dt=self.dt)

    def build_environment(self, system: SystemModel) -> Environment:
        return resolve_environment(system, self.env)

    def planner_config(self, trial: int) -> PlannerConfig:
        iterations = (self.iterations if self.iterations is not None
                      else _UNBOUNDED_ITERATIONS)
        t_prop = (self.build_system().t_prop if self.t_prop is None
                  else self.t_prop)
        return PlannerConfig(
            delta_bn=self.delta_bn, delta_s=self.delta_s, t_prop=t_prop,
            iterations=iterations, seed=self.seed + trial,
            max_seconds=self.max_seconds, xi=self.xi, n0=self.n0,
        )


def resolve_environment(system: SystemModel, env: str | None) -> Environment:
    """Builtin environment by name, default map for None, else a file path."""
    if env is None:
        return make_environment(system)
    path = Path(env)
    looks_like_path = os.sep in env or env.endswith(".txt") or path.exists()
    if looks_like_path:
        return load_environment(path, system)
    return make_environment(system, env)


def run_trial(config: ScenarioConfig, trial: int) -> tuple[PlannerTree, list[MetricsRow]]:
    """Run one seeded trial; returns the finished tree and its metric rows."""
    system = config.build_system()
    env = config.build_environment(system)
    pcfg = config.planner_config(trial)
    recorder = MetricsRecorder(config.planner, config.system, env.name,
                               pcfg.seed, record_timing=config.record_timing)
    tree = run_planner(config.planner, system, env, pcfg, observer=recorder)
    recorder.finalize(tree)
    return tree, recorder.rows


def _trial_rows(config: ScenarioConfig, trial: int) -> list[MetricsRow]:
    return run_trial(config, trial)[1]


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> list[MetricsRow]:
    """Run all trials of a scenario; returns the concatenated metric rows.

    jobs > 1 distributes trials over worker processes (trials share no
    state, so this is a plain map).
    """
    if jobs <= 1 or config.trials == 1:
        rows: list[MetricsRow] = []
        for trial in range(config.trials):
            rows.extend(_trial_rows(config, trial))
        return rows
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunks = pool.map(_trial_rows, [config] * config.trials,
                          range(config.trials))
        rows = []
        for chunk in chunks:
            rows.extend(chunk)
        return rows


def summarize_final_costs(rows: Sequence[MetricsRow]) -> dict:
    """Per-seed final best costs and their mean.

    Returns {"per_seed": {seed: cost or None}, "mean": mean over solved,
    "solve_rate": solved fraction}; mean is nan when nothing solved.
    """
    finals: dict[int, MetricsRow] = {}
    for row in rows:
        cur = finals.get(row.seed)
        if cur is None or row.iteration >= cur.iteration:
            finals[row.seed] = row
    per_seed = {seed: row.best_cost for seed, row in sorted(finals.items())}
    solved = [c for c in per_seed.values() if c is not None]
    return {
        "per_seed": per_seed,
        "mean": float(np.mean(solved)) if solved else math.nan,
        "solve_rate": len(solved) / len(per_seed) if per_seed else 0.0,
    }


# ---------------------------------------------------------------------------
# pruning-radius sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    """Sweep summary for one (delta_s, delta_bn) pair.

    it_mean is the mean wall time to the first solution in seconds,
    ic_mean the mean first-solution cost, fc_mean the mean final cost;
    all over solved trials only (nan when none solved).
    """

    delta_s: float
    delta_bn: float
    trials: int
    solved: int
    it_mean: float
    ic_mean: float
    fc_mean: float


def _sweep_cell(config: ScenarioConfig) -> SweepCell:
    its, ics, fcs = [], [], []
    for trial in range(config.trials):
        system = config.build_system()
        env = config.build_environment(system)
        pcfg = config.planner_config(trial)
        recorder = MetricsRecorder(config.planner, config.system, env.name,
                                   pcfg.seed, record_timing=config.record_timing)
        tree = run_planner(config.planner, system, env, pcfg, observer=recorder)
        recorder.finalize(tree)
        if recorder.first_solution is not None:
            it, wall, cost = recorder.first_solution
            its.append(wall)
            ics.append(cost)
            fcs.append(tree.best_solution.cost)
    mean = lambda xs: float(np.mean(xs)) if xs else math.nan
    return SweepCell(
        delta_s=config.delta_s, delta_bn=config.delta_bn,
        trials=config.trials, solved=len(fcs),
        it_mean=mean(its), ic_mean=mean(ics), fc_mean=mean(fcs),
    )


def sweep_params(base: ScenarioConfig, delta_s_values: Sequence[float],
                 delta_bn_values: Sequence[float],
                 jobs: int = 1) -> list[SweepCell]:
    """Grid the pruning radius against the selection radius.

    Runs base.trials seeded trials per (delta_s, delta_bn) pair and
    summarizes the time to first solution (IT), the first-solution cost
    (IC), and the final cost (FC).  Cells with delta_s >= delta_bn are
    skipped (the planner requires delta_s < delta_bn).
    """
    configs = []
    for ds in delta_s_values:
        for dbn in delta_bn_values:
            if ds >= dbn:
                continue
            configs.append(replace(base, delta_s=ds, delta_bn=dbn))
    if jobs <= 1 or len(configs) == 1:
        return [_sweep_cell(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_cell, configs))


def write_sweep(cells: Iterable[SweepCell], path: str | Path) -> Path:
    """Write sweep cells as CSV (repr floats, exact round-trip)."""
    import csv

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_s", "delta_bn", "trials", "solved",
                         "it_mean", "ic_mean", "fc_mean"])
        for c in cells:
            writer.writerow([repr(c.delta_s), repr(c.delta_bn), c.trials,
                             c.solved, repr(c.it_mean), repr(c.ic_mean),
                             repr(c.fc_mean)])
    return path


# ---------------------------------------------------------------------------
# nearest-neighbor accuracy experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NNAccuracyReport:
    """Agreement of an index with exhaustive search, in percent.

    A single query counts as correct when the returned point is exactly
    as near as the true nearest (id match or distance tie within 1e-12);
    k-queries and range queries count as correct only when the whole
    answer set matches.
    """

    structure: str
    points: int
    queries: int
    k: int
    radius: float
    seed: int
    single_pct: float
    knn_pct: float
    range_pct: float
    build_s: float
    single_s: float
    knn_s: float
    range_s: float


def nn_accuracy_experiment(points: int = 50_000, queries: int = 5_000,
                           structure: str = "graph", k: int = 10,
                           radius: float = 0.5, seed: int = 0,
                           lo: float = 0.0, hi: float = 10.0) -> NNAccuracyReport:
    """Measure index accuracy against brute force on 2D uniform data.

    Builds the chosen structure (graph or brute) on `points` uniform
    samples in [lo, hi]^2, then runs `queries` single, k-nearest, and
    range queries each, comparing every answer with exhaustive search.
    """
    if structure not in ("graph", "brute"):
        raise ValueError(f"structure must be 'graph' or 'brute', got {structure!r}")
    system = make_system("point2d")
    rng = np.random.Generator(np.random.PCG64(seed))
    data = rng.uniform(lo, hi, size=(points, 2))
    query_pts = rng.uniform(lo, hi, size=(queries, 2))

    oracle = BruteForceIndex(2, system.distance_many)
    for p in data:
        oracle.add_node(p)

    t0 = time.perf_counter()
    if structure == "brute":
        index = oracle
    else:
        index = NeighborGraph(2, system.distance_many,
                              np.random.Generator(np.random.PCG64(seed + 1)))
        for p in data:
            index.add_node(p)
    build_s = time.perf_counter() - t0

    eps = 1e-12
    single_ok = 0
    t0 = time.perf_counter()
    for q in query_pts:
        got_id, got_d = index.find_closest(q)
        true_id, true_d = oracle.find_closest(q)
        if got_id == true_id or abs(got_d - true_d) <= eps:
            single_ok += 1
    single_s = time.perf_counter() - t0

    knn_ok = 0
    t0 = time.perf_counter()
    for q in query_pts:
        got = index.find_k_close(q, k)
        true = oracle.find_k_close(q, k)
        got_ids = {i for i, _ in got}
        true_ids = {i for i, _ in true}
        if got_ids == true_ids:
            knn_ok += 1
        else:
            # Distance ties make several answer sets equally valid.
            got_ds = sorted(d for _, d in got)
            true_ds = sorted(d for _, d in true)
            if len(got_ds) == len(true_ds) and all(
                abs(a - b) <= eps for a, b in zip(got_ds, true_ds)
            ):
                knn_ok += 1
    knn_s = time.perf_counter() - t0

    range_ok = 0
    t0 = time.perf_counter()
    for q in query_pts:
        got_ids = {i for i, _ in index.find_within_radius(q, radius)}
        true_ids = {i for i, _ in oracle.find_within_radius(q, radius)}
        if got_ids == true_ids:
            range_ok += 1
    range_s = time.perf_counter() - t0

    pct = lambda n: 100.0 * n / queries
    return NNAccuracyReport(
        structure=structure, points=points, queries=queries, k=k,
        radius=radius, seed=seed,
        single_pct=pct(single_ok), knn_pct=pct(knn_ok), range_pct=pct(range_ok),
        build_s=build_s, single_s=single_s, knn_s=knn_s, range_s=range_s,
    )
