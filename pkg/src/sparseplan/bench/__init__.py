"""Benchmark harness: scenario configs, metric streams, experiment
drivers, phase-grid emission, figure rendering, and the command line."""

from .metrics import (
    MetricsRecorder,
    MetricsRow,
    read_metrics,
    write_metrics,
)
from .runner import (
    NNAccuracyReport,
    ScenarioConfig,
    SweepCell,
    nn_accuracy_experiment,
    run_scenario,
    run_trial,
    summarize_final_costs,
    sweep_params,
    write_sweep,
)
from .phase import PhaseGrid, emit_phase_grid, phase_grid_from_tree, write_tree_edges

__all__ = [
    "MetricsRecorder",
    "MetricsRow",
    "NNAccuracyReport",
    "PhaseGrid",
    "ScenarioConfig",
    "SweepCell",
    "emit_phase_grid",
    "nn_accuracy_experiment",
    "phase_grid_from_tree",
    "read_metrics",
    "run_scenario",
    "run_trial",
    "summarize_final_costs",
    "sweep_params",
    "write_sweep",
    "write_tree_edges",
]
