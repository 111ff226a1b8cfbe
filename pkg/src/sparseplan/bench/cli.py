"""Command-line benchmark harness.

Subcommands:

    plan     one seeded planner run; emits the metric stream, tree edges,
             the solution trajectory when found, and a tree render
    bench    multi-trial (optionally multi-planner) convergence curves
    sweep    pruning-radius grid summarizing time-to-first-solution and
             solution costs per cell
    nnbench  nearest-neighbor index accuracy against brute force
    phase    runs a planner and rasterizes node costs over two state
             dimensions

Every emitted CSV gets a PNG rendering written alongside it.  Exit codes:
0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict
from pathlib import Path

from ..environments import EnvironmentFormatError
from ..planners import PLANNER_NAMES, solution_query
from ..systems import SYSTEM_NAMES
from . import figures
from .metrics import write_metrics
from .phase import default_normalization, emit_phase_grid, write_tree_edges
from .runner import (
    ScenarioConfig,
    nn_accuracy_experiment,
    run_scenario,
    run_trial,
    summarize_final_costs,
    sweep_params,
    write_sweep,
)

__all__ = ["main", "build_parser"]


def _add_scenario_args(parser: argparse.ArgumentParser,
                       multi_planner: bool = False) -> None:
    parser.add_argument("--system", required=True, choices=SYSTEM_NAMES,
                        help="benchmark system")
    parser.add_argument("--env", default=None,
                        help="builtin environment name or environment file path "
                             "(default: the system's default map)")
    if multi_planner:
        parser.add_argument("--planner", default="sst",
                            help="planner name or comma-separated list "
                                 f"({', '.join(PLANNER_NAMES)})")
    else:
        parser.add_argument("--planner", default="sst", choices=PLANNER_NAMES,
                            help="planner name")
    parser.add_argument("--delta-s", type=float, default=None,
                        help="witness/pruning radius (default: system preset)")
    parser.add_argument("--delta-bn", type=float, default=None,
                        help="best-near selection radius (default: system preset)")
    parser.add_argument("--tprop", type=float, default=None,
                        help="max random propagation duration (default: system preset)")
    parser.add_argument("--iters", type=int, default=None,
                        help="iteration budget")
    parser.add_argument("--seconds", type=float, default=None,
                        help="wall-clock budget in seconds")
    parser.add_argument("--trials", type=int, default=1,
                        help="number of seeded trials (default 1)")
    parser.add_argument("--seed", type=int, default=0,
                        help="base seed; trial i uses seed+i (default 0)")
    parser.add_argument("--xi", type=float, default=None,
                        help="sprint radius shrink factor (sst_star)")
    parser.add_argument("--n0", type=int, default=None,
                        help="first sprint iteration count (sst_star)")
    parser.add_argument("--dt", type=float, default=None,
                        help="integration step override")
    parser.add_argument("--out", default=None,
                        help="output directory (default runs/<subcommand>)")
    parser.add_argument("--no-timing", action="store_true",
                        help="write wall times as 0.0 so outputs depend only "
                             "on config and seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for independent trials (default 1)")


def _scenario_from_args(args, planner: str | None = None) -> ScenarioConfig:
    from ..systems import make_system

    system = make_system(args.system)
    delta_s = system.delta_s if args.delta_s is None else args.delta_s
    delta_bn = system.delta_bn if args.delta_bn is None else args.delta_bn
    return ScenarioConfig(
        system=args.system,
        planner=planner if planner is not None else args.planner,
        env=args.env,
        delta_s=delta_s,
        delta_bn=delta_bn,
        t_prop=args.tprop,
        iterations=args.iters,
        max_seconds=args.seconds,
        trials=args.trials,
        seed=args.seed,
        xi=args.xi,
        n0=args.n0,
        dt=args.dt,
        record_timing=not args.no_timing,
    )


def _out_dir(args, subcommand: str) -> Path:
    out = Path(args.out) if args.out else Path("runs") / subcommand
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_solution_csv(trajectory, dt: float, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        d = trajectory.states.shape[1]
        writer.writerow(["step", "t"] + [f"x{i}" for i in range(d)])
        for step, state in enumerate(trajectory.states):
            writer.writerow([step, repr(step * dt)]
                            + [repr(float(v)) for v in state])


def _cmd_plan(args) -> int:
    config = _scenario_from_args(args)
    out = _out_dir(args, "plan")
    tree, rows = run_trial(config, 0)
    write_metrics(rows, out / "metrics.csv")
    write_tree_edges(tree, out / "tree_edges.csv")
    solution = solution_query(tree)
    sol_states = None
    if solution is not None:
        _write_solution_csv(solution, tree.system.dt, out / "solution.csv")
        sol_states = solution.states
    figures.plot_tree(tree, out / "tree.png", solution=sol_states)
    figures.plot_cost_curves(rows, out / "best_cost.png", which="best")
    cost = "unsolved" if solution is None else f"{solution.cost:.4f}"
    print(f"plan: planner={config.planner} system={config.system} "
          f"iterations={tree.iterations} nodes={tree.n_nodes} "
          f"active={tree.n_active} witnesses={tree.n_witnesses} cost={cost}")
    print(f"plan: outputs in {out}")
    return 0


def _cmd_bench(args) -> int:
    planners = [p.strip() for p in args.planner.split(",") if p.strip()]
    for p in planners:
        if p not in PLANNER_NAMES:
            raise ValueError(
                f"unknown planner {p!r}; available: {', '.join(PLANNER_NAMES)}"
            )
    out = _out_dir(args, "bench")
    all_rows = []
    for planner in planners:
        config = _scenario_from_args(args, planner=planner)
        rows = run_scenario(config, jobs=args.jobs)
        all_rows.extend(rows)
        summary = summarize_final_costs(rows)
        print(f"bench: planner={planner} trials={config.trials} "
              f"solve_rate={summary['solve_rate']:.2f} "
              f"mean_final_cost={summary['mean']:.4f}")
    write_metrics(all_rows, out / "metrics.csv")
    figures.plot_cost_curves(all_rows, out / "best_cost.png", which="best")
    figures.plot_cost_curves(all_rows, out / "avg_cost.png", which="avg")
    figures.plot_node_counts(all_rows, out / "nodes.png")
    print(f"bench: outputs in {out}")
    return 0


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    base = _scenario_from_args(args)
    ds_values = _parse_floats(args.ds)
    dbn_values = _parse_floats(args.dbn)
    out = _out_dir(args, "sweep")
    cells = sweep_params(base, ds_values, dbn_values, jobs=args.jobs)
    write_sweep(cells, out / "sweep.csv")
    figures.plot_sweep_heatmap(cells, out / "sweep_fc.png", field="fc_mean")
    figures.plot_sweep_heatmap(cells, out / "sweep_it.png", field="it_mean")
    header = "delta_s  delta_bn  solved  IT(s)    IC       FC"
    print(header)
    for c in cells:
        print(f"{c.delta_s:<8g} {c.delta_bn:<9g} {c.solved}/{c.trials:<5} "
              f"{c.it_mean:<8.4f} {c.ic_mean:<8.4f} {c.fc_mean:<8.4f}")
    print(f"sweep: outputs in {out}")
    return 0


def _cmd_nnbench(args) -> int:
    out = _out_dir(args, "nnbench")
    report = nn_accuracy_experiment(
        points=args.points, queries=args.queries, structure=args.structure,
        k=args.k, radius=args.radius, seed=args.seed,
    )
    path = out / "nn_accuracy.csv"
    data = asdict(report)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data))
        writer.writerow([repr(v) if isinstance(v, float) else v
                         for v in data.values()])

    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    kinds = ["single", f"k={report.k}", "range"]
    vals = [report.single_pct, report.knn_pct, report.range_pct]
    ax.bar(kinds, vals, color="#1f77b4")
    ax.set_ylim(90.0, 100.5)
    ax.set_ylabel("% agreement with brute force")
    ax.set_title(f"{report.structure}: {report.points} points, "
                 f"{report.queries} queries")
    for i, v in enumerate(vals):
        ax.text(i, v, f"{v:.2f}", ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(out / "nn_accuracy.png", dpi=130)
    plt.close(fig)

    print(f"nnbench: structure={report.structure} single={report.single_pct:.2f}% "
          f"k{report.k}={report.knn_pct:.2f}% range={report.range_pct:.2f}% "
          f"(build {report.build_s:.1f}s, queries "
          f"{report.single_s + report.knn_s + report.range_s:.1f}s)")
    print(f"nnbench: outputs in {out}")
    return 0


def _cmd_phase(args) -> int:
    config = _scenario_from_args(args)
    out = _out_dir(args, "phase")
    dims = None
    if args.dims:
        parts = [int(v) for v in args.dims.split(",")]
        if len(parts) != 2:
            raise ValueError(f"--dims needs two comma-separated indices, got {args.dims!r}")
        dims = (parts[0], parts[1])
    tree, rows = run_trial(config, 0)
    write_metrics(rows, out / "metrics.csv")
    norm = args.norm if args.norm is not None else default_normalization(config.planner)
    grid = emit_phase_grid(tree, out / "phase.csv", dims=dims,
                           resolution=args.resolution, normalization=norm)
    figures.plot_phase_grid(
        grid, out / "phase.png",
        title=f"{config.planner} on {config.system}",
    )
    write_tree_edges(tree, out / "tree_edges.csv", dims=dims)
    figures.plot_tree(tree, out / "tree.png", dims=dims)
    print(f"phase: planner={config.planner} system={config.system} "
          f"iterations={tree.iterations} nodes={tree.n_nodes} "
          f"populated_cells={grid.populated}")
    print(f"phase: outputs in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseplan",
        description="Sparse kinodynamic tree planning benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="one seeded planner run")
    _add_scenario_args(p_plan)
    p_plan.set_defaults(func=_cmd_plan)

    p_bench = sub.add_parser("bench", help="multi-trial convergence curves")
    _add_scenario_args(p_bench, multi_planner=True)
    p_bench.set_defaults(func=_cmd_bench)

    p_sweep = sub.add_parser("sweep", help="pruning-radius grid summary")
    _add_scenario_args(p_sweep)
    p_sweep.add_argument("--ds", default="0.2,0.4,0.6,0.8,1.0",
                         help="comma-separated pruning radii")
    p_sweep.add_argument("--dbn", default="1.0,1.2,1.4,1.6,1.8",
                         help="comma-separated selection radii")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_nn = sub.add_parser("nnbench", help="nearest-neighbor accuracy experiment")
    p_nn.add_argument("--points", type=int, default=50_000)
    p_nn.add_argument("--queries", type=int, default=5_000)
    p_nn.add_argument("--structure", choices=("graph", "brute"), default="graph")
    p_nn.add_argument("--k", type=int, default=10)
    p_nn.add_argument("--radius", type=float, default=0.5)
    p_nn.add_argument("--seed", type=int, default=0)
    p_nn.add_argument("--out", default=None)
    p_nn.set_defaults(func=_cmd_nnbench)

    p_phase = sub.add_parser("phase", help="phase-plane cost raster")
    _add_scenario_args(p_phase)
    p_phase.add_argument("--dims", default=None,
                         help="two comma-separated state dims (default: system preset)")
    p_phase.add_argument("--resolution", type=int, default=100)
    p_phase.add_argument("--norm", type=float, default=None,
                         help="cost normalization constant for rendering")
    p_phase.set_defaults(func=_cmd_phase)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, EnvironmentFormatError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
