"""Snapshot data model, edge deltas and per-node change counts.

A :class:`Snapshot` stores an undirected graph in CSR form over its node set.
Node ids are global integers shared by every snapshot of a dynamic network;
``nodes`` is kept sorted so a local row index and a global id order agree,
which makes every neighbor list sorted by global id as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NodeNotFound, StepMismatch

_KEY_SHIFT = np.int64(32)
_MAX_ID = 2**31 - 1


def _frozen(a):
    a.setflags(write=False)
    return a


def edge_keys(edges: np.ndarray) -> np.ndarray:
    """Encode canonical ``u < v`` pairs as sortable int64 keys."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return (edges[:, 0] << _KEY_SHIFT) | edges[:, 1]


def keys_to_edges(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    return np.stack([keys >> _KEY_SHIFT, keys & np.int64(0xFFFFFFFF)], axis=1)


def canonical_edges(edges, weights=None):
    """Drop self-loops, orient pairs as ``u < v`` and collapse duplicates.

    Returns ``(edges, weights, n_dropped)`` with edges sorted by key.  The first
    occurrence of a duplicated pair keeps its weight.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if weights is None:
        weights = np.ones(len(edges), dtype=np.float64)
    else:
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(weights) != len(edges):
            raise ValueError("weights and edges differ in length")
        if np.any(weights < 0):
            raise ValueError("edge weights must be non-negative")
    n_in = len(edges)
    keep = edges[:, 0] != edges[:, 1]
    edges, weights = edges[keep], weights[keep]
    edges = np.sort(edges, axis=1)
    if len(edges) and (edges.min() < 0 or edges.max() > _MAX_ID):
        raise ValueError("node ids must lie in [0, 2**31)")
    keys, first = np.unique(edge_keys(edges), return_index=True)
    return keys_to_edges(keys), weights[first], n_in - len(keys)


class Snapshot:
    """Immutable undirected graph at time step ``t``.

    Attributes:
        t: time-step index.
        nodes: sorted global node ids, shape ``(n,)``.
        indptr, indices, weights: CSR adjacency over local row indices.
    """

    __slots__ = ("t", "nodes", "indptr", "indices", "weights", "_degrees")

    def __init__(self, t, nodes, indptr, indices, weights):
        self.t = int(t)
        self.nodes = _frozen(np.asarray(nodes, dtype=np.int64))
        self.indptr = _frozen(np.asarray(indptr, dtype=np.int64))
        self.indices = _frozen(np.asarray(indices, dtype=np.int64))
        self.weights = _frozen(np.asarray(weights, dtype=np.float64))
        self._degrees = _frozen(np.diff(self.indptr))

    @classmethod
    def from_edges(cls, t: int, edges, weights=None, nodes=None) -> "Snapshot":
        """Build a snapshot from an edge list of global ids.

        ``nodes`` may add isolated nodes; self-loops and duplicates are dropped.
        """
        edges, weights, _ = canonical_edges(edges, weights)
        node_set = np.unique(edges)
        if nodes is not None:
            node_set = np.union1d(node_set, np.asarray(list(nodes), dtype=np.int64))
        n = len(node_set)
        if len(edges) == 0:
            return cls(t, node_set, np.zeros(n + 1, dtype=np.int64),
                       np.zeros(0, dtype=np.int64), np.zeros(0))
        u = np.searchsorted(node_set, edges[:, 0])
        v = np.searchsorted(node_set, edges[:, 1])
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        w = np.concatenate([weights, weights])
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(t, node_set, indptr, dst, w)

    @classmethod
    def from_adjacency(cls, t: int, adjacency: dict) -> "Snapshot":
        """Build from ``{node: [(neighbor, weight), ...]}`` or ``{node: [neighbor, ...]}``."""
        edges, weights = [], []
        for u, nbrs in adjacency.items():
            for item in nbrs:
                v, w = item if isinstance(item, tuple) else (item, 1.0)
                if u < v:
                    edges.append((u, v))
                    weights.append(w)
        return cls.from_edges(t, np.array(edges, dtype=np.int64).reshape(-1, 2),
                              weights, nodes=adjacency.keys())

    # -- basic access -----------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        """Unweighted degrees aligned with ``nodes``."""
        return self._degrees

    @property
    def is_weighted(self) -> bool:
        return bool(np.any(self.weights != 1.0))

    def __len__(self):
        return self.num_nodes

    def __contains__(self, node) -> bool:
        i = np.searchsorted(self.nodes, node)
        return bool(i < len(self.nodes) and self.nodes[i] == node)

    def __repr__(self):
        return f"Snapshot(t={self.t}, nodes={self.num_nodes}, edges={self.num_edges})"

    def index(self, node) -> int:
        """Local row index of a global node id."""
        i = int(np.searchsorted(self.nodes, node))
        if i >= len(self.nodes) or self.nodes[i] != node:
            raise NodeNotFound(f"node {node} not in snapshot t={self.t}")
        return i

    def indices_of(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
        if len(self.nodes) == 0:
            if len(nodes):
                raise NodeNotFound(f"node {int(nodes[0])} not in snapshot t={self.t}")
            return nodes
        idx = np.searchsorted(self.nodes, nodes)
        bad = (idx >= len(self.nodes)) | (self.nodes[np.minimum(idx, len(self.nodes) - 1)] != nodes)
        if np.any(bad):
            raise NodeNotFound(f"node {int(nodes[bad][0])} not in snapshot t={self.t}")
        return idx

    def degree(self, node) -> int:
        return int(self._degrees[self.index(node)])

    def neighbors(self, node) -> np.ndarray:
        i = self.index(node)
        return self.nodes[self.indices[self.indptr[i]:self.indptr[i + 1]]]

    def neighbor_weights(self, node) -> np.ndarray:
        i = self.index(node)
        return self.weights[self.indptr[i]:self.indptr[i + 1]]

    def adjacency(self, node) -> list[tuple[int, float]]:
        """Sorted ``(neighbor, weight)`` list of ``node``."""
        return [(int(v), float(w)) for v, w in
                zip(self.neighbors(node), self.neighbor_weights(node))]

    def has_edge(self, u, v) -> bool:
        if u not in self or v not in self:
            return False
        i = self.index(u)
        row = self.indices[self.indptr[i]:self.indptr[i + 1]]
        j = self.index(v)
        pos = np.searchsorted(row, j)
        return bool(pos < len(row) and row[pos] == j)

    def edge_weight(self, u, v) -> float:
        """Weight of edge ``u-v``, 0.0 when absent."""
        if u not in self or v not in self:
            return 0.0
        i, j = self.index(u), self.index(v)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = lo + int(np.searchsorted(self.indices[lo:hi], j))
        if pos < hi and self.indices[pos] == j:
            return float(self.weights[pos])
        return 0.0

    def edges(self) -> np.ndarray:
        """Undirected edges as global ``(u, v)`` rows with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.num_nodes), self._degrees)
        mask = src < self.indices
        return np.stack([self.nodes[src[mask]], self.nodes[self.indices[mask]]], axis=1)

    def edge_weights(self) -> np.ndarray:
        """Weights aligned with :meth:`edges`."""
        src = np.repeat(np.arange(self.num_nodes), self._degrees)
        return self.weights[src < self.indices]

    def edge_keys(self) -> np.ndarray:
        return edge_keys(self.edges())

    def to_csr(self) -> csr_matrix:
        n = self.num_nodes
        return csr_matrix((self.weights, self.indices, self.indptr), shape=(n, n))

    def with_step(self, t: int) -> "Snapshot":
        return Snapshot(t, self.nodes, self.indptr, self.indices, self.weights)

    def subgraph(self, nodes) -> "Snapshot":
        keep = np.isin(self.nodes, np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes))
        e = self.edges()
        w = self.edge_weights()
        ok = np.isin(e[:, 0], self.nodes[keep]) & np.isin(e[:, 1], self.nodes[keep])
        return Snapshot.from_edges(self.t, e[ok], w[ok], nodes=self.nodes[keep])

    def __eq__(self, other):
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (self.t == other.t and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


def degree(snapshot: Snapshot, node) -> int:
    return snapshot.degree(node)


def largest_connected_component(snapshot: Snapshot) -> Snapshot:
    """Restrict to the largest component.

    Ties between equally large components go to the one holding the smallest
    node id.
    """
    if snapshot.num_nodes == 0:
        return snapshot
    n_comp, labels = connected_components(snapshot.to_csr(), directed=False)
    if n_comp == 1:
        return snapshot
    sizes = np.bincount(labels, minlength=n_comp)
    best = np.flatnonzero(sizes == sizes.max())
    # nodes are sorted, so the first row of a component carries its smallest id
    first_row = np.full(n_comp, snapshot.num_nodes)
    np.minimum.at(first_row, labels, np.arange(snapshot.num_nodes))
    chosen = best[np.argmin(first_row[best])]
    return snapshot.subgraph(snapshot.nodes[labels == chosen])


@dataclass(frozen=True)
class EdgeDelta:
    """Edges added and removed between snapshots ``t-1`` and ``t``.

    ``added`` and ``removed`` are ``(m, 2)`` arrays of canonical ``u < v`` pairs.
    """

    t: int
    added: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    removed: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    def __post_init__(self):
        a, _, _ = canonical_edges(self.added)
        r, _, _ = canonical_edges(self.removed)
        if np.intersect1d(edge_keys(a), edge_keys(r)).size:
            raise ValueError("an edge cannot be both added and removed")
        object.__setattr__(self, "added", _frozen(a))
        object.__setattr__(self, "removed", _frozen(r))

    @property
    def added_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.added}

    @property
    def removed_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.removed}

    def __len__(self):
        return len(self.added) + len(self.removed)

    def touched_nodes(self) -> np.ndarray:
        return np.unique(np.concatenate([self.added.ravel(), self.removed.ravel()]))


def edge_delta(prev: Snapshot, curr: Snapshot) -> EdgeDelta:
    if prev.t + 1 != curr.t:
        raise StepMismatch(f"snapshots t={prev.t} and t={curr.t} are not consecutive")
    pk, ck = prev.edge_keys(), curr.edge_keys()
    added = keys_to_edges(np.setdiff1d(ck, pk, assume_unique=True))
    removed = keys_to_edges(np.setdiff1d(pk, ck, assume_unique=True))
    return EdgeDelta(curr.t, added, removed)


def apply_delta(prev: Snapshot, delta: EdgeDelta) -> Snapshot:
    """Add ``delta.added`` to and drop ``delta.removed`` from ``prev``.

    New edges get weight 1; the node set is the endpoint set of the result.
    """
    keys = prev.edge_keys()
    w = prev.edge_weights()
    keep = ~np.isin(keys, edge_keys(delta.removed))
    edges = np.concatenate([keys_to_edges(keys[keep]), delta.added])
    weights = np.concatenate([w[keep], np.ones(len(delta.added))])
    return Snapshot.from_edges(delta.t, edges, weights)


def per_node_change(delta: EdgeDelta) -> dict[int, int]:
    """Number of delta edges incident to each touched node."""
    ends = np.concatenate([delta.added.ravel(), delta.removed.ravel()])
    nodes, counts = np.unique(ends, return_counts=True)
    return {int(n): int(c) for n, c in zip(nodes, counts)}


def weighted_node_change(prev: Snapshot, curr: Snapshot) -> dict[int, float]:
    """Weighted change per node: sum of ``|w_t - w_{t-1}|`` over incident edges.

    Edges missing from one side count with weight 0 there, which covers both
    neighbors present at ``t`` and neighbors dropped since ``t-1``.
    """
    pk, ck = prev.edge_keys(), curr.edge_keys()
    keys = np.union1d(pk, ck)
    wp = np.zeros(len(keys))
    wc = np.zeros(len(keys))
    wp[np.searchsorted(keys, pk)] = prev.edge_weights()
    wc[np.searchsorted(keys, ck)] = curr.edge_weights()
    diff = np.abs(wc - wp)
    nz = diff > 0
    e = keys_to_edges(keys[nz])
    ends = np.concatenate([e[:, 0], e[:, 1]])
    vals = np.concatenate([diff[nz], diff[nz]])
    nodes, inv = np.unique(ends, return_inverse=True)
    sums = np.bincount(inv, weights=vals, minlength=len(nodes))
    return {int(n): float(s) for n, s in zip(nodes, sums)}
