"""Tree planners over propagated motions.

All planners share one loop: pick a tree node, propagate a random
control for a random duration, and keep the result if it is valid.
They differ in how nodes are selected and whether the tree is pruned:

    naive_random_tree   uniform random node selection, no pruning
    rrt                 nearest node to a uniform state sample
    rrt_best_near       cheapest node within delta_bn of the sample
    sst                 rrt_best_near selection restricted to active
                        nodes, plus witness-based dominance pruning
    sst_star            repeated sst sprints with radii shrinking by xi
                        and sprint lengths growing geometrically
    rrt_star_point      rewiring optimal planner with straight-line
                        steering; kinematic point system only

The sparse planner (sst) keeps a permanent set of witness states that
are pairwise more than delta_s apart; each witness holds the cheapest
known nearby node as its representative.  Only representatives stay
active (selectable); displaced nodes deactivate and childless inactive
branches are deleted.  Witness bookkeeping is structural here: witness
creation is confirmed with an exact scan, so the separation invariant
cannot silently degrade when the approximate index misjudges a query.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .core import (
    DURATION_COST,
    IntegrationDivergenceError,
    PiecewiseControl,
    Trajectory,
    propagate,
)
from .environments import Environment, states_collision_free
from .nn import NeighborGraph
from .systems import SystemModel

__all__ = [
    "PlannerConfig",
    "TreeNode",
    "Witness",
    "SolutionRecord",
    "PlannerTree",
    "monte_carlo_prop",
    "naive_random_tree",
    "rrt",
    "rrt_best_near",
    "sst",
    "sst_star",
    "sst_star_schedule",
    "rrt_star_point",
    "solution_query",
    "check_tree_invariants",
    "PLANNER_NAMES",
    "run_planner",
]


@dataclass(frozen=True)
class PlannerConfig:
    """Shared planner parameters.

    delta_bn is the best-near selection radius and delta_s the witness
    spacing; both in system-distance units with 0 < delta_s < delta_bn.
    t_prop bounds each random propagation.  The loop stops after
    `iterations` iterations or `max_seconds` of wall time, whichever
    comes first.  xi and n0 configure the shrinking-radius meta planner
    only: xi in (0, 1) scales both radii per sprint and n0 is the first
    sprint's iteration count.
    """

    delta_bn: float
    delta_s: float
    t_prop: float
    iterations: int
    seed: int = 0
    max_seconds: float | None = None
    xi: float | None = None
    n0: int | None = None
    literal_order: bool = False  # collision check before the local-best check

    def __post_init__(self) -> None:
        if not (0.0 < self.delta_s < self.delta_bn):
            raise ValueError(
                f"need 0 < delta_s < delta_bn, got delta_s={self.delta_s}, "
                f"delta_bn={self.delta_bn}"
            )
        if self.t_prop <= 0.0:
            raise ValueError(f"t_prop must be positive, got {self.t_prop}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be nonnegative, got {self.iterations}")
        if self.max_seconds is not None and self.max_seconds <= 0.0:
            raise ValueError(f"max_seconds must be positive, got {self.max_seconds}")
        if (self.xi is None) != (self.n0 is None):
            raise ValueError("xi and n0 must be given together")
        if self.xi is not None and not (0.0 < self.xi < 1.0):
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        if self.n0 is not None and self.n0 < 1:
            raise ValueError(f"n0 must be at least 1, got {self.n0}")


@dataclass
class TreeNode:
    """One motion endpoint: state plus the control edge that produced it."""

    id: int
    state: np.ndarray
    parent: int | None
    cost: float
    edge_u: np.ndarray | None      # control held while reaching this node
    edge_duration: float           # seconds; 0 for the root
    edge_cost: float
    active: bool = True
    children: set[int] = field(default_factory=set)


@dataclass
class Witness:
    """A permanent sample point owning the cheapest nearby node."""

    id: int
    state: np.ndarray
    rep: int | None


@dataclass(frozen=True)
class SolutionRecord:
    """Snapshot of the best goal-reaching motion found so far.

    Kept independent of the live tree because pruning may later delete
    the node that achieved it.
    """

    node_id: int
    cost: float
    control: PiecewiseControl | None   # None when the start satisfies the goal
    end_state: np.ndarray


class PlannerTree:
    """Planner state: node table, optional proximity indexes, witnesses.

    active_index holds selectable nodes (all nodes for the baselines,
    only active ones for the sparse planner); witness_index mirrors the
    witness set and never removes entries.  delta_s/delta_bn are the
    radii currently in force (the meta planner shrinks them in place).
    """

    def __init__(self, system: SystemModel, env: Environment,
                 config: PlannerConfig, planner: str,
                 with_witnesses: bool, with_index: bool) -> None:
        self.system = system
        self.env = env
        self.config = config
        self.planner = planner
        self.delta_s = config.delta_s
        self.delta_bn = config.delta_bn
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.nodes: dict[int, TreeNode] = {}
        self.witnesses: dict[int, Witness] = {}
        self.best_solution: SolutionRecord | None = None
        self.iterations = 0
        self.n_active = 0
        self.goal_ids: set[int] = set()
        self._next_node_id = 0
        self._id_list: list[int] = []     # insertion order, uniform selection
        self.active_index: NeighborGraph | None = None
        self.witness_index: NeighborGraph | None = None
        self._graph_of_node: dict[int, int] = {}
        self._node_of_graph: dict[int, int] = {}
        if with_index:
            self.active_index = NeighborGraph(system.d, system.distance_many, self.rng)
        if with_witnesses:
            self.witness_index = NeighborGraph(system.d, system.distance_many, self.rng)

        root_state = np.asarray(env.start, dtype=float)
        root = self._insert_node(root_state, parent=None, edge_u=None,
                                 edge_duration=0.0, edge_cost=0.0)
        self.root_id = root.id
        if with_witnesses:
            self._create_witness(root)

    # -- node bookkeeping ---------------------------------------------------

    def _insert_node(self, state: np.ndarray, parent: int | None,
                     edge_u: np.ndarray | None, edge_duration: float,
                     edge_cost: float) -> TreeNode:
        node_id = self._next_node_id
        self._next_node_id += 1
        cost = edge_cost if parent is None else self.nodes[parent].cost + edge_cost
        node = TreeNode(id=node_id, state=state, parent=parent, cost=cost,
                        edge_u=edge_u, edge_duration=edge_duration,
                        edge_cost=edge_cost)
        self.nodes[node_id] = node
        self._id_list.append(node_id)
        if parent is not None:
            self.nodes[parent].children.add(node_id)
        self.n_active += 1
        if self.active_index is not None:
            graph_id = self.active_index.add_node(state)
            self._graph_of_node[node_id] = graph_id
            self._node_of_graph[graph_id] = node_id
        if self.env.in_goal(self.system, state):
            self.goal_ids.add(node_id)
            if self.best_solution is None or cost < self.best_solution.cost:
                self._record_solution(node)
        return node

    def add_child(self, parent_id: int, trajectory: Trajectory) -> TreeNode:
        """Append the trajectory's endpoint as a child node."""
        (edge_u, _), = trajectory.control.segments
        return self._insert_node(
            np.array(trajectory.end), parent=parent_id, edge_u=edge_u,
            edge_duration=trajectory.duration, edge_cost=trajectory.cost,
        )

    def deactivate(self, node_id: int) -> None:
        """Drop a node from the selectable set (it stays in the tree)."""
        node = self.nodes[node_id]
        if not node.active:
            return
        node.active = False
        self.n_active -= 1
        if self.active_index is not None:
            graph_id = self._graph_of_node.pop(node_id)
            del self._node_of_graph[graph_id]
            self.active_index.remove_node(graph_id)

    def remove_leaf(self, node_id: int) -> None:
        """Delete an inactive childless non-root node from the tree."""
        node = self.nodes[node_id]
        if node.children or node.active or node.parent is None:
            raise ValueError(f"node {node_id} is not a removable leaf")
        self.nodes[node.parent].children.discard(node_id)
        del self.nodes[node_id]
        self.goal_ids.discard(node_id)
        # _id_list keeps the id; only planners without deletion use it.

    # -- witnesses ----------------------------------------------------------

    def _create_witness(self, rep_node: TreeNode) -> Witness:
        state = np.array(rep_node.state)
        graph_id = self.witness_index.add_node(state)
        witness = Witness(id=graph_id, state=state, rep=rep_node.id)
        self.witnesses[graph_id] = witness
        return witness

    def locally_best(self, x_new: np.ndarray, cost_new: float) -> tuple[bool, int | None]:
        """Decide whether a candidate state earns a place in the tree.

        Returns (accept, witness_id); witness_id None means the state is
        farther than delta_s from every witness and will found a new one
        on commit.  The approximate index answers first; a would-be new
        witness is confirmed by exact scan so the pairwise separation of
        witnesses never depends on hill-climbing luck.
        """
        index = self.witness_index
        wid, wdist = index.find_closest(x_new)
        if wdist > self.delta_s:
            wid, wdist = index.brute_closest(x_new)
            if wdist > self.delta_s:
                return True, None
        witness = self.witnesses[wid]
        if witness.rep is None:
            return True, wid
        return cost_new < self.nodes[witness.rep].cost, wid

    def commit_witness(self, witness_id: int | None, node: TreeNode) -> None:
        """Install a node as a witness representative and prune the loser.

        With witness_id None a new witness is founded at the node's state.
        Otherwise the old representative deactivates and any childless
        inactive tail of its branch is deleted.
        """
        if witness_id is None:
            self._create_witness(node)
            return
        witness = self.witnesses[witness_id]
        old_id = witness.rep
        witness.rep = node.id
        if old_id is None:
            return
        old = self.nodes[old_id]
        if node.cost >= old.cost:
            raise AssertionError(
                f"representative of witness {witness_id} would get costlier: "
                f"{old.cost} -> {node.cost}"
            )
        self.deactivate(old_id)
        cursor: int | None = old_id
        while cursor is not None:
            nd = self.nodes[cursor]
            if nd.active or nd.children or nd.parent is None:
                break
            parent = nd.parent
            self.remove_leaf(cursor)
            cursor = parent

    # -- solutions ----------------------------------------------------------

    def _record_solution(self, node: TreeNode) -> None:
        segments = []
        cursor = node
        while cursor.parent is not None:
            segments.append((cursor.edge_u, cursor.edge_duration))
            cursor = self.nodes[cursor.parent]
        segments.reverse()
        control = PiecewiseControl(tuple(segments)) if segments else None
        self.best_solution = SolutionRecord(
            node_id=node.id, cost=node.cost, control=control,
            end_state=np.array(node.state),
        )

    def refresh_best_solution(self) -> None:
        """Re-scan live goal nodes (rewiring may have lowered a cost)."""
        if not self.goal_ids:
            return
        best_id = min(self.goal_ids, key=lambda i: (self.nodes[i].cost, i))
        node = self.nodes[best_id]
        if self.best_solution is None or node.cost < self.best_solution.cost - 1e-12:
            self._record_solution(node)

    # -- selection ----------------------------------------------------------

    def select_uniform(self) -> int:
        """Uniform random node id (baseline selection)."""
        return self._id_list[int(self.rng.integers(len(self._id_list)))]

    def select_nearest(self, x_rand: np.ndarray) -> int:
        """Node approximately nearest to the sample."""
        graph_id, _ = self.active_index.find_closest(x_rand)
        return self._node_of_graph[graph_id]

    def select_best_near(self, x_rand: np.ndarray) -> int:
        """Cheapest node within delta_bn of the sample, else the nearest."""
        near = self.active_index.find_within_radius(x_rand, self.delta_bn)
        if not near:
            graph_id, _ = self.active_index.find_closest(x_rand)
            return self._node_of_graph[graph_id]
        best_node = None
        best_key = None
        for graph_id, _ in near:
            node_id = self._node_of_graph[graph_id]
            key = (self.nodes[node_id].cost, node_id)
            if best_key is None or key < best_key:
                best_key = key
                best_node = node_id
        return best_node

    # -- misc ---------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_witnesses(self) -> int:
        return len(self.witnesses)

    def average_node_cost(self) -> float:
        """Mean cost-from-root over all current tree nodes."""
        return float(np.mean([n.cost for n in self.nodes.values()]))


def monte_carlo_prop(system: SystemModel, x_prop, t_prop: float,
                     rng: np.random.Generator, dt: float | None = None) -> Trajectory:
    """Random propagation: a uniform duration in (0, t_prop] (rounded up
    to the dt grid) under a uniform constant control.

    Collisions are not checked here.  Raises IntegrationDivergenceError
    when the dynamics blow up, which callers treat as a failed draw.
    """
    dt = system.dt if dt is None else float(dt)
    t = t_prop - float(rng.uniform(0.0, t_prop))   # uniform over (0, t_prop]
    steps = max(1, math.ceil(t / dt - 1e-9))
    steps = min(steps, max(1, math.ceil(t_prop / dt - 1e-9)))
    u = system.sample_control(rng)
    return propagate(system, x_prop, PiecewiseControl.single(u, steps * dt), dt)


# ---------------------------------------------------------------------------
# the shared grow loop
# ---------------------------------------------------------------------------

Observer = Callable[[PlannerTree, int, float], None]


def _grow(tree: PlannerTree, iterations: int, selection: str,
          prune: bool, observer: Observer | None,
          deadline: float | None, clock_start: float) -> None:
    """Run the sample/select/propagate/insert loop on an existing tree."""
    system = tree.system
    env = tree.env
    rng = tree.rng
    t_prop = tree.config.t_prop
    literal = tree.config.literal_order
    perf = time.perf_counter
    for _ in range(iterations):
        now = perf()
        if deadline is not None and now >= deadline:
            break
        if selection == "uniform":
            selected = tree.select_uniform()
        else:
            x_rand = system.sample_state(rng)
            if selection == "nearest":
                selected = tree.select_nearest(x_rand)
            else:
                selected = tree.select_best_near(x_rand)
        parent = tree.nodes[selected]
        try:
            traj = monte_carlo_prop(system, parent.state, t_prop, rng)
        except IntegrationDivergenceError:
            tree.iterations += 1
            if observer is not None:
                observer(tree, tree.iterations, perf() - clock_start)
            continue

        if not prune:
            if states_collision_free(system, env, traj.states):
                tree.add_child(selected, traj)
        else:
            x_new = traj.end
            cost_new = parent.cost + traj.cost
            if literal:
                # Textbook order: collision first, then the local-best test.
                if states_collision_free(system, env, traj.states):
                    ok, wid = tree.locally_best(x_new, cost_new)
                    if ok:
                        node = tree.add_child(selected, traj)
                        tree.commit_witness(wid, node)
            else:
                # Default order: the cheap usefulness test gates the
                # expensive collision check.
                ok, wid = tree.locally_best(x_new, cost_new)
                if ok and states_collision_free(system, env, traj.states):
                    node = tree.add_child(selected, traj)
                    tree.commit_witness(wid, node)

        tree.iterations += 1
        if observer is not None:
            observer(tree, tree.iterations, perf() - clock_start)


def _run(system: SystemModel, env: Environment, config: PlannerConfig,
         planner: str, selection: str, prune: bool,
         observer: Observer | None) -> PlannerTree:
    _check_scenario(system, env)
    tree = PlannerTree(system, env, config, planner,
                       with_witnesses=prune, with_index=selection != "uniform")
    start = time.perf_counter()
    deadline = None if config.max_seconds is None else start + config.max_seconds
    _grow(tree, config.iterations, selection, prune, observer, deadline, start)
    return tree


def _check_scenario(system: SystemModel, env: Environment) -> None:
    if env.system_name != system.name:
        raise ValueError(
            f"environment {env.name!r} belongs to {env.system_name!r}, "
            f"not {system.name!r}"
        )
    if not states_collision_free(system, env, env.start):
        raise ValueError(f"start state of {env.name!r} is in collision")


def naive_random_tree(system: SystemModel, env: Environment,
                      config: PlannerConfig,
                      observer: Observer | None = None) -> PlannerTree:
    """Grow by propagating from uniformly random tree nodes."""
    return _run(system, env, config, "naive", "uniform", False, observer)


def rrt(system: SystemModel, env: Environment, config: PlannerConfig,
        observer: Observer | None = None) -> PlannerTree:
    """Grow from the node nearest to each uniform state-space sample."""
    return _run(system, env, config, "rrt", "nearest", False, observer)


def rrt_best_near(system: SystemModel, env: Environment, config: PlannerConfig,
                  observer: Observer | None = None) -> PlannerTree:
    """Grow from the cheapest node within delta_bn of each sample."""
    return _run(system, env, config, "rrt_best_near", "best_near", False, observer)


def sst(system: SystemModel, env: Environment, config: PlannerConfig,
        observer: Observer | None = None) -> PlannerTree:
    """Best-near growth with witness pruning: the sparse stable tree."""
    return _run(system, env, config, "sst", "best_near", True, observer)


def sst_star_schedule(xi: float, d: int, l: int, n0: int,
                      sprints: int) -> list[tuple[int, float, int]]:
    """Sprint table for the shrinking-radius meta planner.

    Returns (j, radius_factor, sprint_iterations) for j = 0..sprints-1,
    where radius_factor = xi**j scales both delta_s and delta_bn and the
    sprint length is n0 for j = 0 and ceil((1 + ln j) * xi**(-(d+l+1) j)
    * n0) afterwards.
    """
    if not (0.0 < xi < 1.0):
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    exponent = d + l + 1
    rows = []
    for j in range(sprints):
        if j == 0:
            n = n0
        else:
            n = math.ceil((1.0 + math.log(j)) * xi ** (-exponent * j) * n0)
        rows.append((j, xi ** j, max(1, n)))
    return rows


def sst_star(system: SystemModel, env: Environment, config: PlannerConfig,
             observer: Observer | None = None) -> PlannerTree:
    """Sparse planner in sprints: radii shrink by xi after each sprint
    while sprint lengths grow, trading coverage for refinement.

    config.xi and config.n0 are required; config.iterations (and/or
    max_seconds) caps the total across sprints.  The tree persists across
    sprints, so later sprints refine earlier coverage.
    """
    if config.xi is None or config.n0 is None:
        raise ValueError("sst_star requires config.xi and config.n0")
    _check_scenario(system, env)
    tree = PlannerTree(system, env, config, "sst_star",
                       with_witnesses=True, with_index=True)
    start = time.perf_counter()
    deadline = None if config.max_seconds is None else start + config.max_seconds
    exponent = system.d + system.l + 1
    j = 0
    sprint = config.n0
    remaining = config.iterations
    while remaining > 0:
        if deadline is not None and time.perf_counter() >= deadline:
            break
        batch = min(sprint, remaining)
        before = tree.iterations
        _grow(tree, batch, "best_near", True, observer, deadline, start)
        done = tree.iterations - before
        remaining -= done
        if done < sprint:
            # Sprint truncated by the budget: radii stay at the values the
            # truncated sprint was running with.
            break
        j += 1
        tree.delta_s = config.delta_s * config.xi ** j
        tree.delta_bn = config.delta_bn * config.xi ** j
        sprint = max(1, math.ceil(
            (1.0 + math.log(j)) * config.xi ** (-exponent * j) * config.n0
        ))
    return tree


PLANNER_NAMES = ("naive", "rrt", "rrt_best_near", "sst", "sst_star", "rrt_star")

_PLANNER_FUNCS = {
    "naive": naive_random_tree,
    "rrt": rrt,
    "rrt_best_near": rrt_best_near,
    "sst": sst,
    "sst_star": sst_star,
}


def run_planner(name: str, system: SystemModel, env: Environment,
                config: PlannerConfig,
                observer: Observer | None = None) -> PlannerTree:
    """Dispatch a planner by CLI name."""
    if name == "rrt_star":
        return rrt_star_point(system, env, config, observer)
    try:
        func = _PLANNER_FUNCS[name]
    except KeyError:
        raise ValueError(
            f"unknown planner {name!r}; available: {', '.join(PLANNER_NAMES)}"
        ) from None
    return func(system, env, config, observer)


# ---------------------------------------------------------------------------
# rewiring planner for the kinematic point
# ---------------------------------------------------------------------------

_RRT_STAR_STEER = 1.0      # max new-edge length, workspace units
_RRT_STAR_KRRG = 4.5       # neighbor count factor, > e*(1 + 1/d) for d = 2


def _point_edge_duration(system: SystemModel, dist: float) -> float:
    """Travel time for a straight edge: distance at top speed, rounded up
    to the dt grid so endpoints stay on integration samples."""
    steps = max(1, math.ceil(dist / (system.control_hi[0] * system.dt) - 1e-9))
    return steps * system.dt


def _connect_point(system: SystemModel, a: np.ndarray, b: np.ndarray):
    """Constant-control straight segment from a to b on the dt grid.

    Speed is dist/duration with the duration rounded up to a dt multiple,
    so the endpoint lands exactly on b and speed stays within bounds.
    Returns None for a degenerate (zero-length) connection.
    """
    delta = b - a
    dist = float(math.hypot(delta[0], delta[1]))
    if dist < 1e-12:
        return None
    duration = _point_edge_duration(system, dist)
    u = np.array([dist / duration, math.atan2(delta[1], delta[0])])
    return propagate(system, a, PiecewiseControl.single(u, duration), system.dt)


def rrt_star_point(system: SystemModel, env: Environment, config: PlannerConfig,
                   observer: Observer | None = None) -> PlannerTree:
    """Rewiring asymptotically optimal baseline for the kinematic point.

    Straight-line steering is exact for this system (constant speed and
    heading trace segments), so edges stay propagation-consistent with
    every other planner.  Parents are chosen among ~4.5*ln(n) approximate
    nearest neighbors and the neighborhood is rewired through each new
    node; with the duration cost this converges toward shortest time.
    """
    if system.name != "point2d":
        raise ValueError(
            f"rrt_star_point requires the kinematic point system, got {system.name!r}"
        )
    _check_scenario(system, env)
    tree = PlannerTree(system, env, config, "rrt_star",
                       with_witnesses=False, with_index=True)
    rng = tree.rng
    start_clock = time.perf_counter()
    deadline = None if config.max_seconds is None else start_clock + config.max_seconds
    perf = time.perf_counter

    def collision_ok(traj: Trajectory) -> bool:
        return states_collision_free(system, env, traj.states)

    for _ in range(config.iterations):
        if deadline is not None and perf() >= deadline:
            break
        x_rand = system.sample_state(rng)
        near_graph, near_dist = tree.active_index.find_closest(x_rand)
        near_id = tree._node_of_graph[near_graph]
        near_state = tree.nodes[near_id].state
        if near_dist > _RRT_STAR_STEER:
            direction = (x_rand - near_state) / near_dist
            x_target = near_state + _RRT_STAR_STEER * direction
        else:
            x_target = x_rand

        k = max(1, math.ceil(_RRT_STAR_KRRG * math.log(max(2, tree.n_nodes))))
        candidates = tree.active_index.find_k_close(x_target, k)
        # Rank candidate parents by the cost they would give the new node.
        # Edge durations are analytic for straight-line steering, so only
        # the collision checks need propagation, and ranking lets the
        # first collision-free candidate win as the cheapest feasible.
        ranked = []
        seen_ids = set()
        for graph_id, dist in candidates:
            node_id = tree._node_of_graph[graph_id]
            if dist < 1e-12:
                continue
            node = tree.nodes[node_id]
            ranked.append((node.cost + _point_edge_duration(system, dist), node_id))
            seen_ids.add(node_id)
        if near_id not in seen_ids and near_dist >= 1e-12:
            dist = float(np.linalg.norm(x_target - near_state))
            if dist >= 1e-12:
                ranked.append(
                    (tree.nodes[near_id].cost + _point_edge_duration(system, dist),
                     near_id)
                )
        ranked.sort()
        chosen = None
        for _, node_id in ranked:
            traj = _connect_point(system, tree.nodes[node_id].state, x_target)
            if traj is not None and collision_ok(traj):
                chosen = (node_id, traj)
                break
        tree.iterations += 1
        if chosen is None:
            if observer is not None:
                observer(tree, tree.iterations, perf() - start_clock)
            continue
        parent_id, traj = chosen
        new_node = tree.add_child(parent_id, traj)

        # Rewire: pull any neighbor whose path improves through the new node.
        for graph_id, _ in candidates:
            node_id = tree._node_of_graph.get(graph_id)
            if node_id is None or node_id == parent_id or node_id == new_node.id:
                continue
            if node_id == tree.root_id:
                continue
            node = tree.nodes[node_id]
            dist = float(np.linalg.norm(node.state - new_node.state))
            if dist < 1e-12:
                continue
            if new_node.cost + _point_edge_duration(system, dist) >= node.cost - 1e-12:
                continue
            back = _connect_point(system, new_node.state, node.state)
            if back is None or not collision_ok(back):
                continue
            old_parent = node.parent
            tree.nodes[old_parent].children.discard(node_id)
            node.parent = new_node.id
            new_node.children.add(node_id)
            (u, _), = back.control.segments
            node.edge_u = u
            node.edge_duration = back.duration
            node.edge_cost = back.cost
            # Recompute subtree costs exactly from the stored edges.
            stack = [node_id]
            while stack:
                nid = stack.pop()
                nd = tree.nodes[nid]
                nd.cost = tree.nodes[nd.parent].cost + nd.edge_cost
                stack.extend(nd.children)
        tree.refresh_best_solution()
        if observer is not None:
            observer(tree, tree.iterations, perf() - start_clock)
    return tree


# ---------------------------------------------------------------------------
# solution extraction and integrity checking
# ---------------------------------------------------------------------------


def solution_query(tree: PlannerTree) -> Trajectory | None:
    """Best goal-reaching trajectory found so far, re-propagated from the
    stored control sequence; None while the goal is unreached.

    The returned trajectory replays deterministically: its endpoint
    matches the recorded goal state to integration precision even when
    pruning has since deleted the achieving node.
    """
    record = tree.best_solution
    if record is None:
        return None
    if record.control is None:
        start = np.asarray(tree.env.start, dtype=float)
        return Trajectory(states=start[None, :], control=None,
                          duration=0.0, cost=0.0)
    return propagate(tree.system, tree.env.start, record.control)


def check_tree_invariants(tree: PlannerTree) -> list[str]:
    """Audit the planner tree; returns human-readable violations (empty
    when sound).

    Covers: parent/child symmetry and root reachability, stored-cost
    consistency with edges, goal-set tracking, active bookkeeping, and in
    witness mode the pairwise witness separation, the witness/active
    bijection, active-leaf property, and index consistency.
    """
    problems: list[str] = []
    nodes = tree.nodes
    system = tree.system

    root = nodes.get(tree.root_id)
    if root is None or root.parent is not None:
        problems.append("root missing or has a parent")
    for nid, node in nodes.items():
        if node.parent is not None:
            parent = nodes.get(node.parent)
            if parent is None:
                problems.append(f"node {nid}: dangling parent {node.parent}")
            elif nid not in parent.children:
                problems.append(f"node {nid}: absent from parent's child set")
        for child in node.children:
            if child not in nodes:
                problems.append(f"node {nid}: dangling child {child}")
            elif nodes[child].parent != nid:
                problems.append(f"node {nid}: child {child} disagrees on parent")
        expected = node.edge_cost if node.parent is None else (
            nodes[node.parent].cost + node.edge_cost
        )
        if not math.isclose(node.cost, expected, rel_tol=0.0, abs_tol=1e-12):
            problems.append(
                f"node {nid}: stored cost {node.cost} != recomputed {expected}"
            )
        if not np.all(np.isfinite(node.state)):
            problems.append(f"node {nid}: non-finite state")
        in_goal = tree.env.in_goal(system, node.state)
        if in_goal != (nid in tree.goal_ids):
            problems.append(f"node {nid}: goal-set membership out of sync")

    # Reachability from the root.
    seen = set()
    stack = [tree.root_id] if tree.root_id in nodes else []
    while stack:
        nid = stack.pop()
        if nid in seen:
            problems.append(f"cycle through node {nid}")
            break
        seen.add(nid)
        stack.extend(nodes[nid].children)
    if len(seen) != len(nodes):
        problems.append(f"{len(nodes) - len(seen)} nodes unreachable from root")

    active_ids = {nid for nid, n in nodes.items() if n.active}
    if len(active_ids) != tree.n_active:
        problems.append("active counter out of sync")
    if tree.active_index is not None:
        if set(tree._graph_of_node) != active_ids:
            problems.append("active index contents differ from active nodes")

    if tree.witness_index is not None:
        reps = {w.rep for w in tree.witnesses.values() if w.rep is not None}
        if reps != active_ids:
            problems.append("active nodes differ from witness representatives")
        if len(tree.witnesses) != len(active_ids):
            problems.append(
                f"|S|={len(tree.witnesses)} but |V_active|={len(active_ids)}"
            )
        for nid, node in nodes.items():
            if not node.children and not node.active:
                problems.append(f"inactive leaf {nid} survived pruning")
        states = np.array([w.state for w in tree.witnesses.values()])
        delta = tree.delta_s
        for i in range(len(states) - 1):
            d = system.distance_many(states[i], states[i + 1:])
            bad = np.nonzero(d <= delta)[0]
            for b in bad:
                problems.append(
                    f"witness pair ({i}, {i + 1 + int(b)}) at distance "
                    f"{float(d[b]):.6g} <= delta_s={delta}"
                )

    if tree.best_solution is not None:
        live_better = [
            nid for nid in tree.goal_ids
            if nodes[nid].cost < tree.best_solution.cost - 1e-9
        ]
        if live_better:
            problems.append(
                f"goal nodes {live_better} cheaper than the recorded best"
            )
    return problems
