"""sparseplan: sparse kinodynamic tree planners with a benchmark harness.

The package plans motions for dynamical systems whose only interface is
forward propagation: sample a control, integrate it for a while, keep the
endpoint if it improves the tree.  The headline planner keeps the tree
sparse with witness-based pruning, which preserves asymptotic near
optimality while the tree stays small enough to query quickly.

Layers, bottom up:

    core            integration, piecewise controls, trajectories, costs
    systems         seven benchmark dynamical systems
    environments    obstacle maps, goal regions, collision checking
    nn              deletion-friendly approximate nearest neighbors
    planners        the tree planners and integrity checks
    bench           experiment runner, metrics, figures, command line
"""

from .core import (
    AnalysisConstants,
    DURATION_COST,
    DurationCost,
    IntegrationDivergenceError,
    PiecewiseControl,
    Trajectory,
    integrate_step,
    propagate,
    rk4_step,
    steps_for_duration,
    validate_divergence_bound,
)
from .systems import (
    SYSTEM_NAMES,
    SystemModel,
    estimate_constants,
    make_system,
    wrap_angles,
)
from .environments import (
    Box,
    Environment,
    EnvironmentFormatError,
    GoalRegion,
    Sphere,
    VerticalCylinder,
    collision_free,
    environment_names,
    load_environment,
    make_environment,
    save_environment,
    states_collision_free,
)
from .nn import BruteForceIndex, NeighborGraph, attachment_degree, seed_count
from .planners import (
    PLANNER_NAMES,
    PlannerConfig,
    PlannerTree,
    SolutionRecord,
    TreeNode,
    Witness,
    check_tree_invariants,
    monte_carlo_prop,
    naive_random_tree,
    rrt,
    rrt_best_near,
    rrt_star_point,
    run_planner,
    solution_query,
    sst,
    sst_star,
    sst_star_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConstants",
    "Box",
    "BruteForceIndex",
    "DURATION_COST",
    "DurationCost",
    "Environment",
    "EnvironmentFormatError",
    "GoalRegion",
    "IntegrationDivergenceError",
    "NeighborGraph",
    "PLANNER_NAMES",
    "PiecewiseControl",
    "PlannerConfig",
    "PlannerTree",
    "SYSTEM_NAMES",
    "SolutionRecord",
    "Sphere",
    "SystemModel",
    "Trajectory",
    "TreeNode",
    "VerticalCylinder",
    "Witness",
    "attachment_degree",
    "check_tree_invariants",
    "collision_free",
    "environment_names",
    "estimate_constants",
    "integrate_step",
    "load_environment",
    "make_environment",
    "make_system",
    "monte_carlo_prop",
    "naive_random_tree",
    "propagate",
    "rk4_step",
    "rrt",
    "rrt_best_near",
    "rrt_star_point",
    "run_planner",
    "save_environment",
    "seed_count",
    "solution_query",
    "sst",
    "sst_star",
    "sst_star_schedule",
    "states_collision_free",
    "steps_for_duration",
    "validate_divergence_bound",
    "wrap_angles",
    "__version__",
]
