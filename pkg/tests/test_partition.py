import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynembed.errors import EmptyGraph, IncompleteAssignment, TooManyParts
from dynembed.graph import Snapshot
from dynembed.partition import (CoarseGraph, PartitionAssignment, balance_cap, coarsen, edge_cut,
                                heavy_edge_matching, level_cut, partition, refine)

from conftest import snap
from partition_oracle import best_bisection_cut
from strategies import snapshots


def check_contract(s, a, k, eps):
    assert np.array_equal(a.nodes, s.nodes)
    assert a.parts.min() >= 0 and a.parts.max() < k
    sizes = a.sizes()
    assert sizes.sum() == s.num_nodes
    assert sizes.max() <= (1 + eps) * math.ceil(s.num_nodes / k) + 1e-9


def is_locally_minimal(s, a):
    sizes = a.sizes()
    cap = a.cap
    for i, v in enumerate(s.nodes.tolist()):
        own = a.parts[i]
        if sizes[own] == 1:
            continue
        conn = np.zeros(a.k)
        for u, w in s.adjacency(v):
            conn[a.part_of(u)] += w
        for b in range(a.k):
            if b != own and sizes[b] + 1 <= cap and conn[b] > conn[own] + 1e-12:
                return False
    return True


def test_path_bisection(path4):
    a = partition(path4, 2, 0.0, seed=0)
    assert sorted(map(sorted, (g.tolist() for g in a.groups()))) == [[0, 1], [2, 3]]
    assert edge_cut(path4, a) == 1


def test_single_part(barbell4):
    a = partition(barbell4, 1, 0.1, seed=3)
    assert set(a.parts.tolist()) == {0}
    assert edge_cut(barbell4, a) == 0


def test_barbell_splits_at_bridge(barbell4):
    assert best_bisection_cut(barbell4) == 1
    a = partition(barbell4, 2, 0.0, seed=0)
    assert edge_cut(barbell4, a) == 1
    assert {frozenset(g.tolist()) for g in a.groups()} == {frozenset(range(4)), frozenset(range(4, 8))}


def test_errors(path4):
    with pytest.raises(TooManyParts):
        partition(path4, 5)
    with pytest.raises(EmptyGraph):
        partition(Snapshot.from_edges(0, np.zeros((0, 2), dtype=np.int64)), 1)
    with pytest.raises(IncompleteAssignment):
        edge_cut(path4, {0: 0, 1: 0, 2: 1})


def test_edge_cut_examples(path4):
    assert edge_cut(path4, {0: 0, 1: 0, 2: 1, 3: 1}) == 1
    assert edge_cut(path4, {v: 0 for v in range(4)}) == 0
    k4 = snap([(a, b) for a in range(4) for b in range(a + 1, 4)])
    assert edge_cut(k4, {0: 0, 1: 0, 2: 1, 3: 1}) == 4


def test_coarsen_edgeless():
    g = CoarseGraph(0, np.ones(4, dtype=np.int64), np.zeros(5, dtype=np.int64),
                    np.zeros(0, dtype=np.int64), np.zeros(0))
    c = coarsen(g, order=[0, 1, 2, 3])
    assert c.n == 4 and c.vwgt.tolist() == [1, 1, 1, 1]


def test_coarsen_single_edge():
    c = coarsen(CoarseGraph.from_snapshot(snap([(0, 1)])), order=[0, 1])
    assert c.n == 1 and c.vwgt.tolist() == [2]


def test_coarsen_path_fixed_order(path4):
    c = coarsen(CoarseGraph.from_snapshot(path4), order=[0, 1, 2, 3])
    assert c.n == 2 and c.vwgt.tolist() == [2, 2]
    assert c.edge_weight_between(0, 1) == 1
    assert [sorted(p.tolist()) for p in c.projection] == [[0, 1], [2, 3]]


@given(snapshots(max_nodes=20), st.integers(0, 2**31))
def test_coarse_graph_invariants(s, seed):
    g = CoarseGraph.from_snapshot(s)
    c = coarsen(g, np.random.default_rng(seed))
    assert c.vwgt.sum() == s.num_nodes
    assert all(1 <= len(p) <= 2 for p in c.projection)
    # coarse edge weight = original edges between member sets
    members = c.projection
    for a in range(c.n):
        for b in range(a + 1, c.n):
            expected = sum(1 for u in members[a] for v in members[b]
                           if s.has_edge(s.nodes[u], s.nodes[v]))
            assert c.edge_weight_between(a, b) == expected


def test_matching_is_a_matching(barbell4):
    g = CoarseGraph.from_snapshot(barbell4)
    match = heavy_edge_matching(g, np.arange(8))
    for v in range(8):
        assert match[match[v]] == v


def test_refine_path_example(path4):
    g = CoarseGraph.from_snapshot(path4)
    start = np.array([0, 1, 0, 1])
    assert level_cut(g, start) == 3
    out = refine(g, start, 2, 2)
    assert level_cut(g, out) == 1
    assert {frozenset(np.flatnonzero(out == p).tolist()) for p in (0, 1)} == {frozenset({0, 1}),
                                                                              frozenset({2, 3})}


def test_refine_fixed_point(path4):
    g = CoarseGraph.from_snapshot(path4)
    assert refine(g, np.array([0, 0, 1, 1]), 2, 2).tolist() == [0, 0, 1, 1]
    assert refine(g, np.zeros(4, dtype=np.int64), 1, 4).tolist() == [0, 0, 0, 0]


@given(snapshots(max_nodes=40), st.integers(2, 6), st.sampled_from([0.0, 0.1, 0.3]),
       st.integers(0, 1000))
def test_partition_contract_property(s, k, eps, seed):
    k = min(k, s.num_nodes)
    trace = []
    a = partition(s, k, eps, seed=seed, trace=trace)
    check_contract(s, a, k, eps)
    assert np.all(a.sizes() > 0)
    assert all(after <= before + 1e-9 for _, before, after in trace)
    assert is_locally_minimal(s, a)


def test_partition_deterministic():
    g = nx.connected_watts_strogatz_graph(200, 6, 0.2, seed=1)
    s = snap(list(g.edges()))
    a1 = partition(s, 12, 0.1, seed=9)
    a2 = partition(s, 12, 0.1, seed=9)
    assert np.array_equal(a1.parts, a2.parts)


def test_balance_cap():
    assert balance_cap(10, 3, 0.0) == 4
    assert balance_cap(10, 2, 0.1) == 5
    assert balance_cap(100, 10, 0.1) == 11


def test_assignment_accessors(path4):
    a = PartitionAssignment(2, 0.0, path4.nodes, np.array([0, 0, 1, 1]))
    assert a.assign == {0: 0, 1: 0, 2: 1, 3: 1}
    assert a.members(1).tolist() == [2, 3]
    assert a.part_of(3) == 1
