"""Planted-partition dynamic graphs with per-step edge churn, for experiments and tests."""
from __future__ import annotations

import numpy as np

from .graph import Snapshot, canonical_edges, edge_keys, keys_to_edges, largest_connected_component


def _draw_edges(communities: np.ndarray, count: int, p_internal: float, movable: np.ndarray,
                rng: np.random.Generator) -> np.ndarray:
    """``count`` random pairs among ``movable`` nodes, internal with prob ``p_internal``."""
    members = {c: np.flatnonzero((communities == c) & movable) for c in np.unique(communities)}
    pool = np.flatnonzero(movable)
    u = pool[rng.integers(0, len(pool), count)]
    v = pool[rng.integers(0, len(pool), count)]
    internal = rng.random(count) < p_internal
    for i in np.flatnonzero(internal):
        same = members[communities[u[i]]]
        v[i] = same[rng.integers(0, len(same))]
    ok = u != v
    return np.column_stack([u[ok], v[ok]])


def planted_partition(n: int = 300, communities: int = 10, avg_degree: float = 10.0,
                      mixing: float = 0.1, steps: int = 10, churn: float = 0.05,
                      inactive_communities: int = 0, seed=None, lcc: bool = True) -> list[Snapshot]:
    """A drifting planted-partition network as ``steps`` snapshots.

    Nodes are split round-robin into ``communities`` groups; a share
    ``1 - mixing`` of edges is internal.  Between consecutive snapshots a
    ``churn`` fraction of the edges is removed and as many fresh edges are
    drawn from the same model.  The first ``inactive_communities`` groups are
    frozen: no edge touching them is ever added or removed.
    """
    rng = np.random.default_rng(seed)
    comm = np.arange(n) % communities
    movable = comm >= inactive_communities
    target = int(round(n * avg_degree / 2))

    everyone = np.ones(n, dtype=bool)
    e, _, _ = canonical_edges(_draw_edges(comm, int(target * 1.2), 1 - mixing, everyone, rng))
    keys = rng.permutation(edge_keys(e))[:target]
    keys.sort()

    snaps = []
    for t in range(steps):
        s = Snapshot.from_edges(t, keys_to_edges(keys))
        snaps.append(largest_connected_component(s) if lcc else s)
        if t == steps - 1:
            break
        ends = keys_to_edges(keys)
        free = movable[ends[:, 0]] & movable[ends[:, 1]]
        m = int(round(churn * len(keys)))
        drop = rng.choice(np.flatnonzero(free), size=min(m, int(free.sum())), replace=False)
        kept = np.delete(keys, drop)
        fresh = np.zeros(0, dtype=np.int64)
        while len(fresh) < len(drop):
            cand, _, _ = canonical_edges(_draw_edges(comm, 2 * len(drop) + 8, 1 - mixing, movable, rng))
            ck = edge_keys(cand)
            ck = ck[~np.isin(ck, keys) & ~np.isin(ck, fresh)]
            _, first = np.unique(ck, return_index=True)
            fresh = np.concatenate([fresh, ck[np.sort(first)][:len(drop) - len(fresh)]])
        keys = np.sort(np.concatenate([kept, fresh]))
    return snaps


def community_of(n: int, communities: int) -> np.ndarray:
    """Community label of each node id, matching :func:`planted_partition`."""
    return np.arange(n) % communities
