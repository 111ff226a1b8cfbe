"""Proximity graph and brute-force index: accuracy, invariants, churn."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sparseplan.nn import (
    BruteForceIndex,
    NeighborGraph,
    attachment_degree,
    seed_count,
)


def euclid_many(q, pts):
    pts = np.asarray(pts, dtype=float)
    return np.linalg.norm(pts - np.asarray(q, dtype=float), axis=-1)


def make_graph(seed=0):
    return NeighborGraph(2, euclid_many, rng=seed)


def fill(graph, n, rng):
    ids = []
    for _ in range(n):
        ids.append(graph.add_node(rng.uniform(0.0, 10.0, size=2)))
    return ids


class TestDegreeSchedules:
    def test_attachment_degree_floor(self):
        assert attachment_degree(1) == 0
        assert attachment_degree(2) == 4
        assert attachment_degree(7) == 4
        assert attachment_degree(8) == math.ceil(2 * math.log(8))
        assert attachment_degree(1000) == math.ceil(2 * math.log(1000))

    def test_seed_count_sqrt(self):
        assert seed_count(1) == 1
        assert seed_count(2) == 2
        assert seed_count(100) == 10
        assert seed_count(101) == 11


class TestMutation:
    def test_add_to_empty(self):
        g = make_graph()
        nid = g.add_node((1.0, 1.0))
        assert len(g) == 1
        assert g.neighbors(nid) == set()

    def test_second_node_mutual_neighbors(self):
        g = make_graph()
        a = g.add_node((1.0, 1.0))
        b = g.add_node((2.0, 2.0))
        assert g.neighbors(a) == {b}
        assert g.neighbors(b) == {a}

    def test_add_then_remove_leaves_empty(self):
        g = make_graph()
        nid = g.add_node((0.5, 0.5))
        g.remove_node(nid)
        assert len(g) == 0
        assert nid not in g

    def test_remove_unknown_id_raises(self):
        g = make_graph()
        g.add_node((0.0, 0.0))
        with pytest.raises(KeyError):
            g.remove_node(12345)

    def test_remove_interior_keeps_symmetry(self):
        g = make_graph(3)
        rng = np.random.default_rng(3)
        ids = fill(g, 100, rng)
        g.remove_node(ids[37])
        g.check_consistency()
        for nid in g.ids():
            assert ids[37] not in g.neighbors(nid)

    def test_ids_never_reused(self):
        g = make_graph()
        a = g.add_node((0.0, 0.0))
        g.remove_node(a)
        b = g.add_node((1.0, 1.0))
        assert b != a

    def test_connectivity_after_uniform_inserts(self):
        """1,000 uniform inserts form one connected component (20 seeds)."""
        for seed in range(20):
            g = make_graph(seed)
            rng = np.random.default_rng(100 + seed)
            fill(g, 1000, rng)
            ids = g.ids()
            seen = {ids[0]}
            frontier = [ids[0]]
            while frontier:
                nid = frontier.pop()
                for m in g.neighbors(nid):
                    if m not in seen:
                        seen.add(m)
                        frontier.append(m)
            assert len(seen) == len(ids)


class TestQueries:
    def test_empty_graph_raises(self):
        g = make_graph()
        with pytest.raises(KeyError):
            g.find_closest((0.0, 0.0))
        with pytest.raises(KeyError):
            g.find_k_close((0.0, 0.0), 3)
        with pytest.raises(KeyError):
            g.find_within_radius((0.0, 0.0), 1.0)

    def test_single_node(self):
        g = make_graph()
        nid = g.add_node((2.0, 3.0))
        found, dist = g.find_closest((0.0, 0.0))
        assert found == nid
        assert dist == pytest.approx(math.hypot(2.0, 3.0))

    def test_query_at_stored_state(self):
        g = make_graph(1)
        rng = np.random.default_rng(1)
        ids = fill(g, 500, rng)
        target = ids[123]
        found, dist = g.find_closest(g.state(target))
        assert found == target
        assert dist == 0.0

    def test_local_minimum_property(self):
        g = make_graph(4)
        rng = np.random.default_rng(4)
        fill(g, 800, rng)
        for _ in range(100):
            q = rng.uniform(0.0, 10.0, size=2)
            found, dist = g.find_closest(q)
            for m in g.neighbors(found):
                assert euclid_many(q, g.state(m)[None, :])[0] >= dist - 1e-12

    def test_k_all_and_k_one(self):
        g = make_graph(5)
        rng = np.random.default_rng(5)
        ids = fill(g, 40, rng)
        got = g.find_k_close((5.0, 5.0), 100)
        assert {i for i, _ in got} == set(ids)
        closest = g.find_closest((5.0, 5.0))
        assert g.find_k_close((5.0, 5.0), 1)[0] == closest

    def test_k_close_sorted_by_distance(self):
        g = make_graph(6)
        rng = np.random.default_rng(6)
        fill(g, 300, rng)
        got = g.find_k_close((4.0, 4.0), 10)
        dists = [d for _, d in got]
        assert dists == sorted(dists)
        assert len(got) == 10

    def test_radius_none_within(self):
        g = make_graph()
        g.add_node((5.0, 5.0))
        g.add_node((6.0, 6.0))
        assert g.find_within_radius((0.0, 0.0), 0.5) == []

    def test_radius_all_within(self):
        g = make_graph(7)
        rng = np.random.default_rng(7)
        ids = fill(g, 50, rng)
        got = g.find_within_radius((5.0, 5.0), 100.0)
        assert {i for i, _ in got} == set(ids)

    def test_deterministic_given_seed(self):
        results = []
        for _ in range(2):
            g = make_graph(11)
            rng = np.random.default_rng(11)
            fill(g, 400, rng)
            qrng = np.random.default_rng(42)
            run = []
            for _ in range(50):
                q = qrng.uniform(0.0, 10.0, size=2)
                run.append(
                    (
                        g.find_closest(q),
                        tuple(g.find_k_close(q, 5)),
                        tuple(g.find_within_radius(q, 1.0)),
                    )
                )
            results.append(run)
        assert results[0] == results[1]


class TestBruteForceIndex:
    def test_exactness(self):
        idx = BruteForceIndex(2, euclid_many)
        rng = np.random.default_rng(8)
        pts = rng.uniform(0.0, 10.0, size=(200, 2))
        ids = [idx.add_node(p) for p in pts]
        q = np.array([3.0, 7.0])
        dists = euclid_many(q, pts)
        assert idx.find_closest(q)[0] == ids[int(np.argmin(dists))]
        got = [i for i, _ in idx.find_k_close(q, 5)]
        expect = [ids[j] for j in np.argsort(dists, kind="stable")[:5]]
        assert got == expect
        within = {i for i, _ in idx.find_within_radius(q, 2.0)}
        assert within == {ids[j] for j in np.nonzero(dists <= 2.0)[0]}

    def test_remove(self):
        idx = BruteForceIndex(2, euclid_many)
        a = idx.add_node((0.0, 0.0))
        b = idx.add_node((1.0, 0.0))
        idx.remove_node(a)
        assert idx.find_closest((0.0, 0.0))[0] == b
        with pytest.raises(KeyError):
            idx.remove_node(a)


class TestAccuracySmall:
    """Static accuracy on a 4,000-point graph (acceptance runs the full scale)."""

    def _build_pair(self, n, seed):
        g = make_graph(seed)
        oracle = BruteForceIndex(2, euclid_many)
        rng = np.random.default_rng(seed)
        for _ in range(n):
            p = rng.uniform(0.0, 10.0, size=2)
            g.add_node(p)
            oracle.add_node(p)
        return g, oracle, rng

    def test_static_accuracy(self):
        g, oracle, rng = self._build_pair(4000, 31)
        single = knn = rng_ok = 0
        queries = 400
        for _ in range(queries):
            q = rng.uniform(0.0, 10.0, size=2)
            single += g.find_closest(q) == oracle.find_closest(q)
            a = {i for i, _ in g.find_k_close(q, 10)}
            b = {i for i, _ in oracle.find_k_close(q, 10)}
            knn += a == b
            ra = {i for i, _ in g.find_within_radius(q, 0.7)}
            rb = {i for i, _ in oracle.find_within_radius(q, 0.7)}
            rng_ok += ra == rb
        assert single / queries >= 0.995
        assert knn / queries >= 0.99
        assert rng_ok / queries >= 0.99

    def test_churn_accuracy(self):
        """10^4 interleaved adds/removes keep accuracy >= 99% vs oracle."""
        g = make_graph(63)
        oracle = BruteForceIndex(2, euclid_many)
        rng = np.random.default_rng(63)
        live = []
        hits = total = 0
        for step in range(10_000):
            if live and rng.random() < 0.35:
                victim = live.pop(int(rng.integers(len(live))))
                g.remove_node(victim)
                oracle.remove_node(victim)
            else:
                p = rng.uniform(0.0, 10.0, size=2)
                nid = g.add_node(p)
                oid = oracle.add_node(p)
                assert nid == oid
                live.append(nid)
            if live and step % 20 == 0:
                q = rng.uniform(0.0, 10.0, size=2)
                hits += g.find_closest(q) == oracle.find_closest(q)
                total += 1
        g.check_consistency()
        assert total > 400
        assert hits / total >= 0.99
