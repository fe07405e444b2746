"""Graph reconstruction, link prediction and inactive sub-network metrics."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .embedding import EmbeddingTable
from .errors import EmptyTestSet, NodeNotFound
from .graph import Snapshot, edge_delta, edge_keys, keys_to_edges
from .partition import PartitionAssignment, partition

DEFAULT_KS = (1, 5, 10, 20, 40)


@dataclass(frozen=True)
class MetricRecord:
    step: int
    metric: str
    k: int | None
    value: float
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    out = np.zeros_like(x)
    ok = norms > 0
    out[ok] = x[ok] / norms[ok, None]
    return out


def cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine similarity; 0 whenever either vector has zero norm."""
    return np.einsum("ij,ij->i", _unit_rows(np.atleast_2d(a)), _unit_rows(np.atleast_2d(b)))


def _precision_rows(x: np.ndarray, snapshot: Snapshot, rows: np.ndarray, k: int) -> np.ndarray:
    """P@k for the snapshot-local ``rows``; candidates are all other snapshot nodes.

    Ties in similarity resolve toward the smaller node id (columns are in id
    order, so the first equal columns win).
    """
    n = snapshot.num_nodes
    deg = snapshot.degrees[rows]
    if n < 2:
        return np.zeros(len(rows))
    kk = min(k, n - 1)
    sims = x[rows] @ x.T
    sims[np.arange(len(rows)), rows] = -np.inf
    kth = -np.partition(-sims, kk - 1, axis=1)[:, kk - 1]
    above = sims > kth[:, None]
    tie = sims == kth[:, None]
    room = kk - above.sum(axis=1)
    top = above | (tie & (np.cumsum(tie, axis=1) <= room[:, None]))
    adj = snapshot.to_csr()[rows].toarray() != 0
    hits = (top & adj).sum(axis=1)
    denom = np.minimum(k, deg)
    out = np.zeros(len(rows))
    ok = denom > 0
    out[ok] = hits[ok] / denom[ok]
    return out


def precision_at_k(embeddings: EmbeddingTable, snapshot: Snapshot, node, k: int) -> float:
    """Share of ``node``'s top-``k`` cosine neighbors that are true neighbors.

    Normalized by ``min(k, deg)``; isolated nodes score 0.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if node not in snapshot:
        raise NodeNotFound(f"node {node} not in snapshot t={snapshot.t}")
    x = _unit_rows(embeddings.vectors[embeddings.rows(snapshot.nodes)])
    return float(_precision_rows(x, snapshot, np.array([snapshot.index(node)]), k)[0])


def precision_at_ks(embeddings: EmbeddingTable, snapshot: Snapshot, ks=DEFAULT_KS,
                    chunk: int = 512) -> dict[int, float]:
    """MeanP@k for several k at once, one similarity pass per row chunk."""
    ks = [int(k) for k in ks]
    if any(k < 1 for k in ks):
        raise ValueError("k must be >= 1")
    x = _unit_rows(embeddings.vectors[embeddings.rows(snapshot.nodes)])
    n = snapshot.num_nodes
    if n == 0:
        return {k: 0.0 for k in ks}
    sums = dict.fromkeys(ks, 0.0)
    for lo in range(0, n, chunk):
        rows = np.arange(lo, min(n, lo + chunk))
        for k in ks:
            sums[k] += _precision_rows(x, snapshot, rows, k).sum()
    return {k: sums[k] / n for k in ks}


def mean_precision_at_k(embeddings: EmbeddingTable, snapshot: Snapshot, k: int) -> float:
    return precision_at_ks(embeddings, snapshot, [k])[k]


@dataclass(frozen=True)
class LpTestSet:
    positives: np.ndarray  # (m, 2) node pairs, edges at t+1
    negatives: np.ndarray  # (m, 2) node pairs, non-edges at t+1

    def __post_init__(self):
        if len(self.positives) != len(self.negatives):
            raise ValueError("test set must be balanced")

    def __len__(self):
        return len(self.positives)


def _sample_nonedges(nodes: np.ndarray, forbidden: np.ndarray, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Up to ``count`` distinct canonical node pairs whose keys avoid ``forbidden``."""
    n = len(nodes)
    available = n * (n - 1) // 2 - len(forbidden)
    count = min(count, max(0, available))
    chosen = np.zeros(0, dtype=np.int64)
    while len(chosen) < count:
        need = count - len(chosen)
        a = nodes[rng.integers(0, n, 2 * need + 16)]
        b = nodes[rng.integers(0, n, 2 * need + 16)]
        ok = a != b
        keys = edge_keys(np.column_stack([np.minimum(a, b), np.maximum(a, b)])[ok])
        keys = keys[~np.isin(keys, forbidden) & ~np.isin(keys, chosen)]
        _, first = np.unique(keys, return_index=True)
        chosen = np.concatenate([chosen, keys[np.sort(first)][:need]])
    return keys_to_edges(chosen)


def build_lp_testset(gt: Snapshot, gt1: Snapshot, embeddings_at_t: EmbeddingTable, seed=None,
                     min_size: int = 100) -> LpTestSet:
    """Balanced link-prediction pairs for predicting ``gt1`` from embeddings at ``gt``.

    Positives are edges added by the step plus sampled unchanged edges of
    ``gt1``; negatives are deleted edges plus sampled non-edges of ``gt1``.
    Each side is filled to ``max(|added|, |deleted|, min_size)`` where the
    graph allows, then both are cut to the smaller side.  Only pairs whose
    endpoints are embedded at ``t`` and present at ``t+1`` are used.
    """
    rng = np.random.default_rng(seed)
    eligible = gt1.nodes[np.isin(gt1.nodes, embeddings_at_t.nodes)]
    delta = edge_delta(gt.with_step(gt1.t - 1), gt1)

    def usable(edges):
        return edges[np.isin(edges[:, 0], eligible) & np.isin(edges[:, 1], eligible)]

    added = usable(delta.added)
    removed = usable(delta.removed)
    target = max(len(added), len(removed), min_size)

    edges1 = usable(gt1.edges())
    rest = edges1[~np.isin(edge_keys(edges1), edge_keys(added))]
    extra = rest[rng.permutation(len(rest))[:max(0, target - len(added))]]
    pos = np.concatenate([added, extra]).reshape(-1, 2)

    forbidden = np.concatenate([gt1.edge_keys(), edge_keys(removed)])
    sampled = _sample_nonedges(eligible, forbidden, max(0, target - len(removed)), rng)
    neg = np.concatenate([removed, sampled]).reshape(-1, 2)

    m = min(len(pos), len(neg))
    if m == 0:
        raise EmptyTestSet(f"no eligible pairs between t={gt.t} and t={gt1.t}")
    # delta pairs come first, so trimming drops sampled pairs before them
    return LpTestSet(pos[:m].astype(np.int64), neg[:m].astype(np.int64))


def pair_scores(embeddings: EmbeddingTable, pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return cosine(embeddings.vectors[embeddings.rows(pairs[:, 0])],
                  embeddings.vectors[embeddings.rows(pairs[:, 1])])


def auc_from_scores(pos, neg) -> float:
    """Mann-Whitney AUC; ties between a positive and a negative count half."""
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise EmptyTestSet("need at least one positive and one negative")
    ranks = rankdata(np.concatenate([pos, neg]))
    p, q = len(pos), len(neg)
    return float((ranks[:p].sum() - p * (p + 1) / 2) / (p * q))


def auc(embeddings: EmbeddingTable, testset: LpTestSet) -> float:
    return auc_from_scores(pair_scores(embeddings, testset.positives),
                           pair_scores(embeddings, testset.negatives))


def diagnostic_partition(snapshots, seed: int = 0, nodes_per_part: int = 50,
                         epsilon: float = 0.1) -> PartitionAssignment:
    """Partition of the largest snapshot into parts of about ``nodes_per_part`` nodes."""
    largest = max(snapshots, key=lambda s: s.num_nodes)
    k = max(1, int(round(largest.num_nodes / nodes_per_part)))
    return partition(largest, min(k, largest.num_nodes), epsilon, seed=seed)


def inactive_subnetworks(snapshots, assignment: PartitionAssignment, w: int = 5) -> float:
    """Fraction of parts left untouched by every edge delta of some ``w``-snapshot window.

    A window of ``w`` consecutive snapshots spans ``w - 1`` deltas.
    """
    snapshots = list(snapshots)
    if w < 2:
        raise ValueError("window must be >= 2")
    if len(snapshots) < w:
        raise ValueError(f"need at least {w} snapshots, got {len(snapshots)}")
    k = assignment.k
    # touched[i, p]: delta between snapshot i and i+1 touches part p
    touched = np.zeros((len(snapshots) - 1, k), dtype=bool)
    for i in range(len(snapshots) - 1):
        a, b = snapshots[i], snapshots[i + 1]
        nodes = edge_delta(a.with_step(0), b.with_step(1)).touched_nodes()
        nodes = nodes[np.isin(nodes, assignment.nodes)]
        touched[i, assignment.parts[np.searchsorted(assignment.nodes, nodes)]] = True
    inactive = np.zeros(k, dtype=bool)
    for start in range(len(snapshots) - w + 1):
        inactive |= ~touched[start:start + w - 1].any(axis=0)
    return float(inactive.sum() / k)
