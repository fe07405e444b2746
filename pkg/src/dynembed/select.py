"""Change reservoir, change scores and representative-node selection.

Each node's accumulated change is divided by its previous degree (a node with
many neighbors needs more edits to move).  One representative per part is
drawn from the within-part softmax of these scores.  Strategies S1-S3 are the
ablation baselines that ignore the partition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyPart, StepMismatch
from .graph import EdgeDelta, Snapshot, per_node_change, weighted_node_change
from .partition import PartitionAssignment


class Strategy(str, Enum):
    S1 = "S1"  # uniform with replacement from the reservoir
    S2 = "S2"  # without replacement from the reservoir, topped up from all nodes
    S3 = "S3"  # without replacement from all nodes
    S4 = "S4"  # one softmax draw per part


@dataclass
class Reservoir:
    """Accumulated per-node change, carried across steps."""

    counts: dict[int, float] = field(default_factory=dict)
    step: int = 0

    def __len__(self):
        return len(self.counts)

    def __contains__(self, node):
        return node in self.counts

    def get(self, node) -> float:
        return self.counts.get(int(node), 0.0)

    def without(self, nodes) -> "Reservoir":
        counts = dict(self.counts)
        for v in nodes:
            counts.pop(int(v), None)
        return Reservoir(counts, self.step)


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.1
    strategy: Strategy = Strategy.S4
    weighted: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


def n_select(alpha: float, n_nodes: int) -> int:
    """Number of parts / selected nodes: ``round(alpha * n)`` clamped to ``[1, n]``."""
    if n_nodes <= 0:
        return 0
    return min(n_nodes, max(1, int(math.floor(alpha * n_nodes + 0.5))))


def update_reservoir(reservoir: Reservoir, delta: EdgeDelta, changes=None) -> Reservoir:
    """Add each node's change at ``delta.t`` to its accumulated count.

    ``changes`` overrides the unweighted per-node counts derived from
    ``delta`` (used by the weighted variant).
    """
    if delta.t != reservoir.step + 1:
        raise StepMismatch(f"reservoir at step {reservoir.step} cannot take delta t={delta.t}")
    if changes is None:
        changes = per_node_change(delta)
    counts = dict(reservoir.counts)
    for v, c in changes.items():
        counts[v] = counts.get(v, 0.0) + float(c)
    return Reservoir(counts, delta.t)


def score(node, delta_count: float, reservoir: Reservoir, prev_snapshot: Snapshot) -> float:
    """Accumulated change of ``node`` over its degree at ``t-1``.

    Nodes absent from ``prev_snapshot`` (or isolated there) score 0.
    """
    if node not in prev_snapshot:
        return 0.0
    deg = prev_snapshot.degree(node)
    if deg == 0:
        return 0.0
    return (float(delta_count) + reservoir.get(node)) / deg


def score_all(snapshot: Snapshot, prev_snapshot: Snapshot, updated: Reservoir) -> np.ndarray:
    """Scores for every node of ``snapshot``, aligned with ``snapshot.nodes``.

    ``updated`` is the reservoir after this step's update, so its count equals
    this step's change plus the previous accumulation.
    """
    nodes = snapshot.nodes
    acc = np.array([updated.counts.get(v, 0.0) for v in nodes.tolist()])
    deg = np.zeros(len(nodes))
    pos = np.searchsorted(prev_snapshot.nodes, nodes)
    if prev_snapshot.num_nodes:
        pos_c = np.minimum(pos, prev_snapshot.num_nodes - 1)
        present = prev_snapshot.nodes[pos_c] == nodes
        deg[present] = prev_snapshot.degrees[pos_c[present]]
    out = np.zeros(len(nodes))
    ok = deg > 0
    out[ok] = acc[ok] / deg[ok]
    return out


def softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max())
    return e / e.sum()


def sample_representatives(snapshot: Snapshot, assignment: PartitionAssignment, scores,
                           seed=None, size: int | None = None) -> np.ndarray:
    """Draw one node per part from the softmax of scores within that part.

    Uses the Gumbel-max trick: the argmax of ``score + Gumbel noise`` over a
    part is distributed as that part's softmax.

    Args:
        scores: array aligned with ``snapshot.nodes`` or a ``{node: score}``
            map (missing nodes score 0).
        size: if given, return ``size`` independent draws as a
            ``(size, k)`` array.

    Returns:
        Selected node ids ordered by part index.
    """
    if not np.array_equal(assignment.nodes, snapshot.nodes):
        raise ValueError("assignment does not cover the snapshot")
    if isinstance(scores, dict):
        s = np.array([float(scores.get(v, 0.0)) for v in snapshot.nodes.tolist()])
    else:
        s = np.asarray(scores, dtype=np.float64)
    sizes = assignment.sizes()
    if np.any(sizes == 0):
        raise EmptyPart(f"part {int(np.flatnonzero(sizes == 0)[0])} is empty")
    rng = np.random.default_rng(seed)
    k = assignment.k
    order = np.argsort(assignment.parts, kind="stable")
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    draws = 1 if size is None else size
    out = np.empty((draws, k), dtype=np.int64)
    sorted_scores = s[order]
    n = len(s)
    chunk = max(1, (1 << 20) // n)
    for lo in range(0, draws, chunk):
        hi = min(draws, lo + chunk)
        keyed = sorted_scores + rng.gumbel(size=(hi - lo, n))
        best = np.maximum.reduceat(keyed, starts, axis=1)
        # first position in each part reaching its maximum
        hit = keyed == np.repeat(best, sizes, axis=1)
        first = np.minimum.reduceat(np.where(hit, np.arange(n), n), starts, axis=1)
        out[lo:hi] = snapshot.nodes[order[first]]
    return out[0] if size is None else out


def select_nodes(config: SelectionConfig, snapshot: Snapshot, assignment, reservoir: Reservoir,
                 delta: EdgeDelta, prev_snapshot: Snapshot, seed=None):
    """Pick this step's walk start nodes.

    ``reservoir`` is the accumulation up to ``t-1``; it is updated with
    ``delta`` first.

    Returns:
        ``(selected, reservoir)`` where ``reservoir`` is the updated
        accumulation with the selected nodes removed.
    """
    changes = weighted_node_change(prev_snapshot, snapshot) if config.weighted else None
    updated = update_reservoir(reservoir, delta, changes)
    rng = np.random.default_rng(seed)
    nodes = snapshot.nodes
    k = n_select(config.alpha, len(nodes))
    strategy = config.strategy
    pool = np.array(sorted(v for v in updated.counts if v in snapshot), dtype=np.int64)

    if strategy is Strategy.S1 and len(pool) == 0:
        strategy = Strategy.S3
    if strategy is Strategy.S4:
        if assignment is None or assignment.k != k:
            raise ValueError(f"S4 needs a partition with k={k} parts")
        selected = sample_representatives(snapshot, assignment,
                                          score_all(snapshot, prev_snapshot, updated), rng)
    elif strategy is Strategy.S1:
        selected = rng.choice(pool, size=k, replace=True)
    elif strategy is Strategy.S2:
        if len(pool) >= k:
            selected = rng.choice(pool, size=k, replace=False)
        else:
            rest = np.setdiff1d(nodes, pool, assume_unique=True)
            selected = np.concatenate([pool, rng.choice(rest, size=k - len(pool), replace=False)])
    else:
        selected = rng.choice(nodes, size=k, replace=False)
    selected = np.asarray(selected, dtype=np.int64)
    return selected, updated.without(selected)
