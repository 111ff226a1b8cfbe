"""Approximate nearest-neighbor search over a mutable point set.

NeighborGraph keeps an undirected proximity graph: every inserted state is
linked to its (approximately) k closest neighbors, with k growing like
2*ln(n).  Queries hill-climb from a random seed sample of ~sqrt(n)
vertices, so single-closest, k-closest, and range lookups cost far below
a linear scan while removals are O(degree) with no rebuilding.  Results
are approximate by design; BruteForceIndex provides the exact reference
used by the accuracy experiments and by callers that need a guarantee.

Distances come from a caller-supplied batch function dist_many(q, P) ->
(n,) so system metrics (wrapped angles, weighted dims) plug in directly.
Ties between equal distances resolve to the lowest node id everywhere.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

__all__ = ["NeighborGraph", "BruteForceIndex", "attachment_degree", "seed_count"]

DistanceMany = Callable[[np.ndarray, np.ndarray], np.ndarray]


def attachment_degree(n: int) -> int:
    """Edges attached to a newly inserted node when the graph holds n nodes."""
    if n <= 1:
        return 0
    return max(4, math.ceil(2.0 * math.log(n)))


def seed_count(n: int) -> int:
    """Random seeds examined before hill climbing a query over n nodes."""
    return max(1, math.ceil(math.sqrt(n)))


class _PointStore:
    """Growable float64 row store with stable integer ids and O(1) removal."""

    def __init__(self, dim: int, dist_many: DistanceMany) -> None:
        self.dim = dim
        self.dist_many = dist_many
        self._states = np.empty((64, dim))
        self._next_id = 0
        self._live: list[int] = []          # live ids, order mutated by swap-removal
        self._pos: dict[int, int] = {}      # id -> index in _live

    def __len__(self) -> int:
        return len(self._live)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._pos

    def state(self, node_id: int) -> np.ndarray:
        return self._states[node_id]

    def ids(self) -> list[int]:
        return list(self._live)

    def insert(self, state: np.ndarray) -> int:
        node_id = self._next_id
        self._next_id += 1
        if node_id >= self._states.shape[0]:
            grown = np.empty((2 * self._states.shape[0], self.dim))
            grown[: self._states.shape[0]] = self._states
            self._states = grown
        self._states[node_id] = state
        self._pos[node_id] = len(self._live)
        self._live.append(node_id)
        return node_id

    def discard(self, node_id: int) -> None:
        pos = self._pos.pop(node_id)
        last = self._live.pop()
        if last != node_id:
            self._live[pos] = last
            self._pos[last] = pos

    def distances(self, q: np.ndarray, ids: list[int] | np.ndarray) -> np.ndarray:
        return self.dist_many(q, self._states[np.asarray(ids, dtype=np.intp)])

    def sample_ids(self, rng: np.random.Generator, count: int) -> list[int]:
        n = len(self._live)
        if count >= n:
            return list(self._live)
        picks = rng.choice(n, size=count, replace=False)
        return [self._live[i] for i in picks]


def _best_of(ids: np.ndarray, dists: np.ndarray) -> tuple[int, float]:
    """Index/distance of the minimum, lowest id on exact ties."""
    dmin = dists.min()
    tied = ids[dists == dmin]
    return int(tied.min()), float(dmin)


class NeighborGraph:
    """Undirected proximity graph with hill-climbing approximate queries.

    Parameters
    ----------
    dim : state dimension
    dist_many : batch distance function, dist_many(q, P) -> (len(P),)
    rng : generator (or seed) driving the random query seeds
    """

    def __init__(self, dim: int, dist_many: DistanceMany,
                 rng: np.random.Generator | int | None = None) -> None:
        self._store = _PointStore(dim, dist_many)
        self._adj: dict[int, set[int]] = {}
        if not isinstance(rng, np.random.Generator):
            rng = np.random.Generator(np.random.PCG64(0 if rng is None else rng))
        self._rng = rng

    def __len__(self) -> int:
        return len(self._store)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._store

    def state(self, node_id: int) -> np.ndarray:
        """Stored state for a live id."""
        if node_id not in self._store:
            raise KeyError(f"node {node_id} is not in the graph")
        return self._store.state(node_id)

    def ids(self) -> list[int]:
        """Live node ids (unordered)."""
        return self._store.ids()

    def neighbors(self, node_id: int) -> set[int]:
        return set(self._adj[node_id])

    # -- mutation -----------------------------------------------------------

    def add_node(self, state) -> int:
        """Insert a state, linking it to ~max(4, 2 ln n) near neighbors."""
        state = np.asarray(state, dtype=float)
        k = attachment_degree(len(self._store) + 1)
        near = self.find_k_close(state, k) if k > 0 and len(self._store) > 0 else []
        node_id = self._store.insert(state)
        links = {m for m, _ in near}
        self._adj[node_id] = links
        for m in links:
            self._adj[m].add(node_id)
        return node_id

    def remove_node(self, node_id: int) -> None:
        """Unlink and drop a node; its id is never reused."""
        if node_id not in self._store:
            raise KeyError(f"node {node_id} is not in the graph")
        for m in self._adj.pop(node_id):
            self._adj[m].discard(node_id)
        self._store.discard(node_id)

    # -- queries ------------------------------------------------------------

    def find_closest(self, q) -> tuple[int, float]:
        """Approximately closest node: best random seed, then hill climbing.

        Returns (node id, distance).  Raises KeyError on an empty graph.
        """
        if len(self._store) == 0:
            raise KeyError("graph is empty")
        q = np.asarray(q, dtype=float)
        seeds = self._store.sample_ids(self._rng, seed_count(len(self._store)))
        ids = np.asarray(seeds, dtype=np.intp)
        best, best_d = _best_of(ids, self._store.distances(q, seeds))
        while True:
            cand = [m for m in self._adj[best]]
            if not cand:
                return best, best_d
            ids = np.asarray(cand, dtype=np.intp)
            cid, cd = _best_of(ids, self._store.distances(q, cand))
            if cd < best_d or (cd == best_d and cid < best):
                best, best_d = cid, cd
            else:
                return best, best_d

    def find_k_close(self, q, k: int) -> list[tuple[int, float]]:
        """Approximately the k closest nodes, sorted by (distance, id).

        Starts from find_closest and grows the candidate set with graph
        neighborhoods until the k best stop changing.
        """
        if len(self._store) == 0:
            raise KeyError("find_k_close on an empty graph")
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        q = np.asarray(q, dtype=float)
        first, first_d = self.find_closest(q)
        evaluated: dict[int, float] = {first: first_d}
        current: list[int] = [first]
        while True:
            frontier = set()
            for m in current:
                frontier.update(self._adj[m])
            frontier.difference_update(evaluated)
            if frontier:
                batch = list(frontier)
                for m, dm in zip(batch, self._store.distances(q, batch)):
                    evaluated[m] = float(dm)
            ranked = sorted(evaluated.items(), key=lambda md: (md[1], md[0]))[:k]
            best = [m for m, _ in ranked]
            if best == current:
                return ranked
            current = best

    def find_within_radius(self, q, radius: float) -> list[tuple[int, float]]:
        """Nodes within the radius, sorted by (distance, id).

        Expands the neighbor graph outward from the closest node, so a
        within-radius node connected only through far-away vertices can be
        missed (approximate by design).  Empty when even the climb seed
        lands outside the radius.
        """
        if len(self._store) == 0:
            raise KeyError("find_within_radius on an empty graph")
        q = np.asarray(q, dtype=float)
        seed, seed_d = self.find_closest(q)
        if seed_d > radius:
            return []
        inside: dict[int, float] = {seed: seed_d}
        evaluated = {seed}
        frontier = [seed]
        while frontier:
            cand = set()
            for m in frontier:
                cand.update(self._adj[m])
            cand.difference_update(evaluated)
            if not cand:
                break
            batch = list(cand)
            evaluated.update(batch)
            dists = self._store.distances(q, batch)
            frontier = []
            for m, dm in zip(batch, dists):
                if dm <= radius:
                    inside[m] = float(dm)
                    frontier.append(m)
        return sorted(inside.items(), key=lambda md: (md[1], md[0]))

    def brute_closest(self, q) -> tuple[int, float]:
        """Exact closest node by full scan (guard path for invariants)."""
        if len(self._store) == 0:
            raise KeyError("graph is empty")
        q = np.asarray(q, dtype=float)
        live = self._store.ids()
        ids = np.asarray(live, dtype=np.intp)
        return _best_of(ids, self._store.distances(q, live))

    # -- integrity ----------------------------------------------------------

    def check_consistency(self) -> None:
        """Assert adjacency symmetry and the absence of dangling edges."""
        for node_id, links in self._adj.items():
            assert node_id in self._store, f"adjacency for dead node {node_id}"
            assert node_id not in links, f"self loop on {node_id}"
            for m in links:
                assert m in self._adj, f"edge {node_id}->{m} dangles"
                assert node_id in self._adj[m], f"edge {node_id}->{m} not symmetric"


class BruteForceIndex:
    """Exact nearest-neighbor index by exhaustive scan; same API shape as
    NeighborGraph, used as the accuracy oracle and for small point sets."""

    def __init__(self, dim: int, dist_many: DistanceMany) -> None:
        self._store = _PointStore(dim, dist_many)

    def __len__(self) -> int:
        return len(self._store)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._store

    def state(self, node_id: int) -> np.ndarray:
        if node_id not in self._store:
            raise KeyError(f"node {node_id} is not in the index")
        return self._store.state(node_id)

    def ids(self) -> list[int]:
        return self._store.ids()

    def add_node(self, state) -> int:
        return self._store.insert(np.asarray(state, dtype=float))

    def remove_node(self, node_id: int) -> None:
        if node_id not in self._store:
            raise KeyError(f"node {node_id} is not in the index")
        self._store.discard(node_id)

    def _scan(self, q) -> tuple[np.ndarray, np.ndarray]:
        live = self._store.ids()
        ids = np.asarray(live, dtype=np.intp)
        return ids, self._store.distances(np.asarray(q, dtype=float), live)

    def find_closest(self, q) -> tuple[int, float]:
        if len(self._store) == 0:
            raise KeyError("index is empty")
        return _best_of(*self._scan(q))

    def find_k_close(self, q, k: int) -> list[tuple[int, float]]:
        if len(self._store) == 0:
            raise KeyError("find_k_close on an empty index")
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        ids, dists = self._scan(q)
        order = np.lexsort((ids, dists))[:k]
        return [(int(ids[i]), float(dists[i])) for i in order]

    def find_within_radius(self, q, radius: float) -> list[tuple[int, float]]:
        if len(self._store) == 0:
            raise KeyError("find_within_radius on an empty index")
        ids, dists = self._scan(q)
        keep = dists <= radius
        ids, dists = ids[keep], dists[keep]
        order = np.lexsort((ids, dists))
        return [(int(ids[i]), float(dists[i])) for i in order]
