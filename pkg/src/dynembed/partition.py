"""Balanced K-way edge-cut partitioning by multilevel refinement.

Three phases: heavy-edge-matching coarsening down to a small graph, greedy
graph growing from K seed nodes on the coarsest graph, then projection back
through every level with boundary refinement.  Part sizes are capped at
``floor((1 + epsilon) * ceil(n / k))``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EmptyGraph, IncompleteAssignment, TooManyParts
from .graph import Snapshot

_EPS_GAIN = 1e-12


@dataclass(frozen=True)
class PartitionAssignment:
    """Node-to-part map; ``parts[i]`` is the part of ``nodes[i]``."""

    k: int
    epsilon: float
    nodes: np.ndarray
    parts: np.ndarray

    @property
    def assign(self) -> dict[int, int]:
        return dict(zip(self.nodes.tolist(), self.parts.tolist()))

    @property
    def cap(self) -> int:
        return balance_cap(len(self.nodes), self.k, self.epsilon)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.parts, minlength=self.k)

    def members(self, part: int) -> np.ndarray:
        return self.nodes[self.parts == part]

    def groups(self) -> list[np.ndarray]:
        order = np.argsort(self.parts, kind="stable")
        bounds = np.cumsum(self.sizes())[:-1]
        return np.split(self.nodes[order], bounds)

    def part_of(self, node) -> int:
        i = int(np.searchsorted(self.nodes, node))
        if i >= len(self.nodes) or self.nodes[i] != node:
            raise IncompleteAssignment(f"node {node} has no part")
        return int(self.parts[i])


def balance_cap(n: int, k: int, epsilon: float) -> int:
    """Largest allowed part size.

    Uses ``ceil(n / k)`` so an exact split stays feasible when ``k`` does not
    divide ``n``; flooring is exact for integer sizes.
    """
    return int(math.floor((1.0 + epsilon) * math.ceil(n / k) + 1e-9))


@dataclass
class CoarseGraph:
    """One level of the multilevel hierarchy.

    ``cmap`` maps each node of the finer level to its super-node here; it is
    ``None`` for the original graph (level 0).
    """

    level: int
    vwgt: np.ndarray
    xadj: np.ndarray
    adjncy: np.ndarray
    adjwgt: np.ndarray
    cmap: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.vwgt)

    @property
    def projection(self) -> list[np.ndarray]:
        """Finer-level members of each super-node."""
        if self.cmap is None:
            return [np.array([i]) for i in range(self.n)]
        order = np.argsort(self.cmap, kind="stable")
        bounds = np.cumsum(np.bincount(self.cmap, minlength=self.n))[:-1]
        return np.split(order, bounds)

    def edge_weight_between(self, a: int, b: int) -> float:
        lo, hi = self.xadj[a], self.xadj[a + 1]
        hit = np.flatnonzero(self.adjncy[lo:hi] == b)
        return float(self.adjwgt[lo + hit[0]]) if len(hit) else 0.0

    @classmethod
    def from_snapshot(cls, snapshot: Snapshot) -> "CoarseGraph":
        return cls(0, np.ones(snapshot.num_nodes, dtype=np.int64),
                   np.asarray(snapshot.indptr), np.asarray(snapshot.indices),
                   np.asarray(snapshot.weights))


def level_cut(graph: CoarseGraph, assign) -> float:
    assign = np.asarray(assign)
    src = np.repeat(np.arange(graph.n), np.diff(graph.xadj))
    cross = assign[src] != assign[graph.adjncy]
    return float(graph.adjwgt[cross].sum()) / 2.0


# -- coarsening ----------------------------------------------------------


def heavy_edge_matching(graph: CoarseGraph, order, max_vwgt=None) -> np.ndarray:
    """Match each unmatched node to its unmatched neighbor of heaviest edge.

    Nodes are visited in ``order``; ties keep the first neighbor in adjacency
    order.  Returns ``match`` with ``match[v] == v`` for unmatched nodes.
    """
    xadj = graph.xadj.tolist()
    adj = graph.adjncy.tolist()
    wgt = graph.adjwgt.tolist()
    vw = graph.vwgt.tolist()
    if max_vwgt is None:
        max_vwgt = float("inf")
    match = [-1] * graph.n
    for v in order:
        if match[v] != -1:
            continue
        best, best_w = v, -1.0
        for e in range(xadj[v], xadj[v + 1]):
            u = adj[e]
            if match[u] == -1 and u != v and wgt[e] > best_w and vw[u] + vw[v] <= max_vwgt:
                best, best_w = u, wgt[e]
        match[v] = best
        match[best] = v
    return np.asarray(match, dtype=np.int64)


def contract(graph: CoarseGraph, match: np.ndarray) -> CoarseGraph:
    """Collapse matched pairs into super-nodes, summing parallel edge weights."""
    n = graph.n
    first = np.minimum(np.arange(n), match)
    reps, cmap = np.unique(first, return_inverse=True)
    nc = len(reps)
    vwgt = np.bincount(cmap, weights=graph.vwgt, minlength=nc).astype(np.int64)
    src = cmap[np.repeat(np.arange(n), np.diff(graph.xadj))]
    dst = cmap[graph.adjncy]
    keep = src != dst
    keys = src[keep] * nc + dst[keep]
    ukeys, inv = np.unique(keys, return_inverse=True)
    w = np.bincount(inv, weights=graph.adjwgt[keep], minlength=len(ukeys))
    csrc, cdst = ukeys // nc, ukeys % nc
    xadj = np.zeros(nc + 1, dtype=np.int64)
    np.cumsum(np.bincount(csrc, minlength=nc), out=xadj[1:])
    return CoarseGraph(graph.level + 1, vwgt, xadj, cdst, w, cmap)


def coarsen(graph: CoarseGraph, rng=None, order=None, max_vwgt=None) -> CoarseGraph:
    """One matching-based contraction step.

    Visit order is ``order`` if given, else a permutation drawn from ``rng``.
    """
    if order is None:
        rng = np.random.default_rng(rng)
        order = rng.permutation(graph.n)
    match = heavy_edge_matching(graph, list(order), max_vwgt)
    return contract(graph, match)


# -- initial partition ---------------------------------------------------


def _grow(graph: CoarseGraph, k: int, cap: int, rng) -> list[int]:
    """Greedy multi-source growing with per-part weight caps."""
    n = graph.n
    xadj = graph.xadj.tolist()
    adj = graph.adjncy.tolist()
    wgt = graph.adjwgt.tolist()
    vw = graph.vwgt.tolist()
    assign = [-1] * n
    pw = [0] * k
    heaps = [[] for _ in range(k)]
    conn = [dict() for _ in range(k)]
    tick = 0

    def take(p, v):
        nonlocal tick
        assign[v] = p
        pw[p] += vw[v]
        cp, hp = conn[p], heaps[p]
        for e in range(xadj[v], xadj[v + 1]):
            u = adj[e]
            if assign[u] == -1:
                c = cp.get(u, 0.0) + wgt[e]
                cp[u] = c
                tick += 1
                heapq.heappush(hp, (-c, tick, u))

    for p, s in enumerate(rng.choice(n, size=k, replace=False).tolist()):
        take(p, s)
    order = [(pw[p], p) for p in range(k)]
    heapq.heapify(order)
    while order:
        w, p = heapq.heappop(order)
        if w != pw[p]:
            continue
        hp = heaps[p]
        grown = False
        while hp:
            _, _, u = heapq.heappop(hp)
            if assign[u] == -1 and pw[p] + vw[u] <= cap:
                take(p, u)
                grown = True
                break
        if grown:
            heapq.heappush(order, (pw[p], p))
    # leftovers: unreachable or blocked by caps
    for v in range(n):
        if assign[v] == -1:
            nbr_parts = {assign[adj[e]] for e in range(xadj[v], xadj[v + 1])} - {-1}
            fits = [p for p in nbr_parts if pw[p] + vw[v] <= cap]
            p = min(fits, key=lambda q: (pw[q], q)) if fits else min(range(k), key=lambda q: (pw[q], q))
            assign[v] = p
            pw[p] += vw[v]
    return assign


# -- refinement ----------------------------------------------------------
#
# Kernels share one idiom: ``conn`` is a length-k scratch row holding the edge
# weight from the current node into each part, ``touched`` lists the parts
# written so the row can be zeroed in O(deg).


@njit(cache=True)
def _gather(v, xadj, adj, wgt, assign, conn, touched):
    nt = 0
    for e in range(xadj[v], xadj[v + 1]):
        p = assign[adj[e]]
        if conn[p] == 0.0:
            touched[nt] = p
            nt += 1
        conn[p] += wgt[e]
    return nt


@njit(cache=True)
def _clear(conn, touched, nt):
    for i in range(nt):
        conn[touched[i]] = 0.0


@njit(cache=True)
def _best_move(v, xadj, adj, wgt, vw, assign, pw, pc, cap, conn, touched):
    """Best balance-feasible target of ``v``; returns (gain, part) or (-inf, -1)."""
    a = assign[v]
    best_g = -np.inf
    best_b = -1
    if pc[a] <= 1:
        return best_g, best_b
    nt = _gather(v, xadj, adj, wgt, assign, conn, touched)
    inside = conn[a]
    for i in range(nt):
        b = touched[i]
        if b == a or pw[b] + vw[v] > cap:
            continue
        g = conn[b] - inside
        if g > best_g or (g == best_g and b < best_b):
            best_g = g
            best_b = b
    _clear(conn, touched, nt)
    return best_g, best_b


@njit(cache=True)
def _is_boundary(v, xadj, adj, assign):
    a = assign[v]
    for e in range(xadj[v], xadj[v + 1]):
        if assign[adj[e]] != a:
            return True
    return False


@njit(cache=True)
def _single_pass(xadj, adj, wgt, vw, assign, pw, pc, cap, conn, touched):
    n = len(vw)
    gains = np.empty(n)
    cand = np.empty(n, dtype=np.int64)
    m = 0
    for v in range(n):
        if _is_boundary(v, xadj, adj, assign):
            g, b = _best_move(v, xadj, adj, wgt, vw, assign, pw, pc, cap, conn, touched)
            if b >= 0 and g > _EPS_GAIN:
                gains[m] = -g
                cand[m] = v
                m += 1
    order = np.argsort(gains[:m], kind="mergesort")
    moved = False
    for i in range(m):
        v = cand[order[i]]
        g, b = _best_move(v, xadj, adj, wgt, vw, assign, pw, pc, cap, conn, touched)
        if b >= 0 and g > _EPS_GAIN:
            a = assign[v]
            assign[v] = b
            pw[a] -= vw[v]
            pc[a] -= 1
            pw[b] += vw[v]
            pc[b] += 1
            moved = True
    return moved


@njit(cache=True)
def _weight_between(v, u, xadj, adj, wgt):
    w = 0.0
    for e in range(xadj[v], xadj[v + 1]):
        if adj[e] == u:
            w += wgt[e]
    return w


@njit(cache=True)
def _swap_gain(v, u, a, b, xadj, adj, wgt, assign, conn, touched):
    nt = _gather(v, xadj, adj, wgt, assign, conn, touched)
    g = conn[b] - conn[a]
    _clear(conn, touched, nt)
    nt = _gather(u, xadj, adj, wgt, assign, conn, touched)
    g += conn[a] - conn[b]
    _clear(conn, touched, nt)
    return g - 2.0 * _weight_between(v, u, xadj, adj, wgt)


@njit(cache=True)
def _swap_pass(xadj, adj, wgt, vw, assign, pw, pc, cap, k, conn, touched, top):
    """Exchange boundary node pairs between neighboring parts when that cuts edges.

    Sizes stay fixed for unit weights, which escapes states where every single
    move is blocked by the balance cap.
    """
    n = len(vw)
    cap_rows = len(adj) + 1
    keys = np.empty(cap_rows, dtype=np.int64)
    gains = np.empty(cap_rows)
    nodes = np.empty(cap_rows, dtype=np.int64)
    m = 0
    for v in range(n):
        if not _is_boundary(v, xadj, adj, assign):
            continue
        a = assign[v]
        nt = _gather(v, xadj, adj, wgt, assign, conn, touched)
        inside = conn[a]
        for i in range(nt):
            b = touched[i]
            if b != a:
                keys[m] = a * k + b
                gains[m] = inside - conn[b]
                nodes[m] = v
                m += 1
        _clear(conn, touched, nt)
    keys, gains, nodes = keys[:m], gains[:m], nodes[:m]
    o1 = np.argsort(gains, kind="mergesort")
    o2 = np.argsort(keys[o1], kind="mergesort")
    order = o1[o2]
    keys, nodes = keys[order], nodes[order]
    starts = np.empty(m + 1, dtype=np.int64)
    ukeys = np.empty(m, dtype=np.int64)
    ng = 0
    for i in range(m):
        if i == 0 or keys[i] != keys[i - 1]:
            ukeys[ng] = keys[i]
            starts[ng] = i
            ng += 1
    starts[ng] = m
    ukeys = ukeys[:ng]
    swapped = False
    for gi in range(ng):
        a = ukeys[gi] // k
        b = ukeys[gi] % k
        if a > b:
            continue
        gj = np.searchsorted(ukeys, b * k + a)
        if gj >= ng or ukeys[gj] != b * k + a:
            continue
        best_g = _EPS_GAIN
        bv = -1
        bu = -1
        for i in range(starts[gi], min(starts[gi + 1], starts[gi] + top)):
            v = nodes[i]
            if assign[v] != a:
                continue
            for j in range(starts[gj], min(starts[gj + 1], starts[gj] + top)):
                u = nodes[j]
                if assign[u] != b:
                    continue
                if pw[a] - vw[v] + vw[u] > cap or pw[b] - vw[u] + vw[v] > cap:
                    continue
                g = _swap_gain(v, u, a, b, xadj, adj, wgt, assign, conn, touched)
                if g > best_g:
                    best_g = g
                    bv = v
                    bu = u
        if bv >= 0:
            assign[bv] = b
            assign[bu] = a
            pw[a] += vw[bu] - vw[bv]
            pw[b] += vw[bv] - vw[bu]
            swapped = True
    return swapped


@njit(cache=True)
def _rebalance(xadj, adj, wgt, vw, assign, pw, pc, cap, k, conn, touched):
    """Move nodes out of overweight parts and into empty ones, cheapest first."""
    n = len(vw)
    for a in range(k):
        if pw[a] <= cap:
            continue
        members = np.flatnonzero(assign == a)
        score = np.empty(len(members))
        for i in range(len(members)):
            v = members[i]
            nt = _gather(v, xadj, adj, wgt, assign, conn, touched)
            ext = 0.0
            for t in range(nt):
                if touched[t] != a and conn[touched[t]] > ext:
                    ext = conn[touched[t]]
            score[i] = conn[a] - ext
            _clear(conn, touched, nt)
        order = np.argsort(score, kind="mergesort")
        for i in range(len(order)):
            if pw[a] <= cap or pc[a] <= 1:
                break
            v = members[order[i]]
            nt = _gather(v, xadj, adj, wgt, assign, conn, touched)
            inside = conn[a]
            bb = -1
            bg = -np.inf
            for b in range(k):
                if b == a or pw[b] + vw[v] > cap:
                    continue
                g = conn[b] - inside
                if g > bg or (g == bg and pw[b] < pw[bb]):
                    bg = g
                    bb = b
            _clear(conn, touched, nt)
            if bb >= 0:
                assign[v] = bb
                pw[a] -= vw[v]
                pc[a] -= 1
                pw[bb] += vw[v]
                pc[bb] += 1
    for b in range(k):
        if pc[b] > 0:
            continue
        donor = np.argmax(pc)
        if pc[donor] <= 1:
            break
        best = -1
        best_in = np.inf
        for v in range(n):
            if assign[v] != donor or vw[v] > cap:
                continue
            nt = _gather(v, xadj, adj, wgt, assign, conn, touched)
            inside = conn[donor]
            _clear(conn, touched, nt)
            if inside < best_in:
                best_in = inside
                best = v
        if best >= 0:
            assign[best] = b
            pw[donor] -= vw[best]
            pc[donor] -= 1
            pw[b] += vw[best]
            pc[b] += 1


def _part_totals(vw, assign, k):
    pw = np.bincount(assign, weights=vw, minlength=k).astype(np.int64)
    pc = np.bincount(assign, minlength=k).astype(np.int64)
    return pw, pc


def rebalance(graph: CoarseGraph, assign, k: int, cap: int) -> np.ndarray:
    """Bring every part within ``cap`` and make every part non-empty.

    Always succeeds on unit node weights; at coarse levels heavy super-nodes
    may leave residual overweight for finer levels to repair.
    """
    assign = np.array(assign, dtype=np.int64)
    pw, pc = _part_totals(graph.vwgt, assign, k)
    _rebalance(graph.xadj, graph.adjncy, graph.adjwgt.astype(np.float64), graph.vwgt,
               assign, pw, pc, cap, k, np.zeros(k), np.zeros(k, dtype=np.int64))
    return assign


def refine(graph: CoarseGraph, assign, k: int, cap: int, max_rounds: int = 100) -> np.ndarray:
    """Greedy boundary refinement of a balanced assignment on ``graph``.

    Alternates gain-ranked single-node passes with pairwise swap passes until
    neither improves the cut.  Each accepted move strictly lowers the cut and
    keeps all parts within ``cap`` and non-empty; the result admits no
    improving single-node move.
    """
    assign = np.array(assign, dtype=np.int64)
    if k == 1:
        return assign
    xadj, adj, vw = graph.xadj, graph.adjncy, graph.vwgt
    wgt = graph.adjwgt.astype(np.float64)
    pw, pc = _part_totals(vw, assign, k)
    conn, touched = np.zeros(k), np.zeros(k, dtype=np.int64)
    for _ in range(max_rounds):
        if _single_pass(xadj, adj, wgt, vw, assign, pw, pc, cap, conn, touched):
            continue
        if not _swap_pass(xadj, adj, wgt, vw, assign, pw, pc, cap, k, conn, touched, 6):
            break
    while _single_pass(xadj, adj, wgt, vw, assign, pw, pc, cap, conn, touched):
        pass
    return assign


def partition(snapshot: Snapshot, k: int, epsilon: float = 0.1, seed: int = 0,
              n_init: int = 4, trace: list | None = None) -> PartitionAssignment:
    """Partition ``snapshot`` into ``k`` balanced parts minimizing the edge cut.

    Args:
        snapshot: graph to split.
        k: number of parts, ``1 <= k <= |V|``.
        epsilon: balance slack; parts hold at most
            ``floor((1 + epsilon) * ceil(|V| / k))`` nodes.
        seed: fixes matching order, seed nodes and tie-breaking.
        n_init: greedy initial partitions tried on the coarsest graph.
        trace: if given, receives ``(level, cut_before, cut_after)`` per
            refinement call.
    """
    n = snapshot.num_nodes
    if n == 0:
        raise EmptyGraph("cannot partition an empty snapshot")
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise TooManyParts(f"k={k} exceeds |V|={n}")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if k == 1:
        return PartitionAssignment(1, epsilon, snapshot.nodes, np.zeros(n, dtype=np.int64))

    rng = np.random.default_rng(seed)
    cap = balance_cap(n, k, epsilon)
    coarsen_to = max(4 * k, 64)
    max_vwgt = max(1, min(cap, math.ceil(1.5 * n / coarsen_to)))
    levels = [CoarseGraph.from_snapshot(snapshot)]
    while levels[-1].n > coarsen_to:
        nxt = coarsen(levels[-1], rng, max_vwgt=max_vwgt)
        if nxt.n > 0.95 * levels[-1].n:
            break
        levels.append(nxt)

    coarsest = levels[-1]
    best = None
    trials = max(1, n_init) if coarsest.n <= 256 else 1
    for _ in range(trials):
        start = rebalance(coarsest, _grow(coarsest, k, cap, rng), k, cap)
        before = level_cut(coarsest, start)
        cand = refine(coarsest, start, k, cap)
        cut = level_cut(coarsest, cand)
        if best is None or cut < best[0]:
            best = (cut, cand, before)
    _, assign, before = best
    if trace is not None:
        trace.append((coarsest.level, before, best[0]))

    for lvl in range(len(levels) - 1, 0, -1):
        finer = levels[lvl - 1]
        assign = assign[levels[lvl].cmap]
        assign = rebalance(finer, assign, k, cap)
        before = level_cut(finer, assign)
        assign = refine(finer, assign, k, cap)
        if trace is not None:
            trace.append((finer.level, before, level_cut(finer, assign)))
    # unit weights at level 0: any leftover imbalance is always repairable
    sizes = np.bincount(assign, minlength=k)
    if sizes.max() > cap or sizes.min() == 0:
        assign = refine(levels[0], rebalance(levels[0], assign, k, cap), k, cap)
    return PartitionAssignment(k, epsilon, snapshot.nodes, np.asarray(assign, dtype=np.int64))


def edge_cut(snapshot: Snapshot, assignment) -> float:
    """Total weight of edges whose endpoints sit in different parts."""
    if isinstance(assignment, PartitionAssignment):
        lookup = assignment.assign
    else:
        lookup = dict(assignment)
    missing = [int(v) for v in snapshot.nodes if int(v) not in lookup]
    if missing:
        raise IncompleteAssignment(f"{len(missing)} nodes unassigned, e.g. {missing[0]}")
    e = snapshot.edges()
    if len(e) == 0:
        return 0.0
    pu = np.array([lookup[int(u)] for u in e[:, 0]])
    pv = np.array([lookup[int(v)] for v in e[:, 1]])
    return float(snapshot.edge_weights()[pu != pv].sum())
