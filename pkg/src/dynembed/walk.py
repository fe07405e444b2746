"""Truncated random walks and sliding-window positive pairs.

Every walk draws from its own splitmix64 stream keyed by
``(seed, start node, repetition)``, so the corpus does not depend on how walks
are scheduled across threads.  Neighbor draws use per-node alias tables.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .errors import NodeNotFound
from .graph import Snapshot

# tbb in this image is too old for numba and warns on first use
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _mix(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def stream_seed(seed, a, b):
    """Independent stream state for the key ``(seed, a, b)``."""
    x = _mix(np.uint64(seed))
    x = _mix(x ^ np.uint64(a))
    return _mix(x ^ np.uint64(b))


@njit(cache=True)
def next_uniform(state):
    """Advance a splitmix64 state; returns ``(state, u)`` with u in [0, 1)."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return state, np.float64(z >> np.uint64(11)) * _U53


@njit(cache=True)
def _vose_row(w, prob, alias):
    n = len(w)
    total = w.sum()
    scaled = w * (n / total)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    for i in range(nl):
        prob[large[i]] = 1.0
        alias[large[i]] = large[i]
    for i in range(ns):
        prob[small[i]] = 1.0
        alias[small[i]] = small[i]


@njit(cache=True)
def _build_alias(indptr, weights):
    prob = np.ones(len(weights))
    alias = np.zeros(len(weights), dtype=np.int64)
    for v in range(len(indptr) - 1):
        lo, hi = indptr[v], indptr[v + 1]
        if hi - lo > 1:
            _vose_row(weights[lo:hi], prob[lo:hi], alias[lo:hi])
    return prob, alias


@njit(cache=True)
def alias_draw(prob, alias, lo, n, state):
    state, u = next_uniform(state)
    i = min(int(u * n), n - 1)
    state, u = next_uniform(state)
    if u >= prob[lo + i]:
        i = alias[lo + i]
    return state, i


class AliasTable:
    """Categorical sampler over a fixed weight vector (Vose's alias method)."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or len(w) == 0 or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be a non-empty non-negative vector with positive sum")
        self.prob, self.alias = _build_alias(np.array([0, len(w)]), w)

    def probabilities(self) -> np.ndarray:
        """Exact distribution encoded by the table."""
        n = len(self.prob)
        p = self.prob / n
        np.add.at(p, self.alias, (1.0 - self.prob) / n)
        return p

    def sample(self, size: int, seed: int = 0) -> np.ndarray:
        return _alias_sample(self.prob, self.alias, size, np.uint64(stream_seed(seed, 0, 0)))


@njit(cache=True)
def _alias_sample(prob, alias, size, state):
    out = np.empty(size, dtype=np.int64)
    n = len(prob)
    for t in range(size):
        state, out[t] = alias_draw(prob, alias, 0, n, state)
    return out


@njit(cache=True, parallel=True)
def _walk_kernel(indptr, indices, prob, alias, starts, start_ids, r, length, seed):
    n_start = len(starts)
    walks = np.full((r * n_start, length), -1, dtype=np.int64)
    for task in prange(r * n_start):
        rep = task // n_start
        si = task % n_start
        state = stream_seed(seed, start_ids[si], rep)
        cur = starts[si]
        walks[task, 0] = cur
        for step in range(1, length):
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg == 0:
                break
            state, j = alias_draw(prob, alias, lo, deg, state)
            cur = indices[lo + j]
            walks[task, step] = cur
    return walks


class WalkSampler:
    """Alias tables for one snapshot, reused by every walk on it."""

    def __init__(self, snapshot: Snapshot):
        self.snapshot = snapshot
        self.prob, self.alias = _build_alias(np.asarray(snapshot.indptr),
                                             np.asarray(snapshot.weights))

    def walks(self, starts, r: int, length: int, seed: int) -> np.ndarray:
        """``r`` walks per start node, repetition-major, as global ids.

        Rows shorter than ``length`` (isolated starts) are padded with -1.
        """
        s = self.snapshot
        start_ids = np.asarray(starts, dtype=np.int64).reshape(-1)
        local = s.indices_of(start_ids)
        w = _walk_kernel(np.asarray(s.indptr), np.asarray(s.indices), self.prob, self.alias,
                         local, start_ids, int(r), int(length), np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        return np.where(w >= 0, s.nodes[np.maximum(w, 0)], -1)


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if not 1 <= self.window < self.walk_length:
            raise ValueError("window must satisfy 1 <= window < walk_length")


def _seed_int(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    return int(rng or 0)


def random_walk(snapshot: Snapshot, start, length: int, rng=0) -> np.ndarray:
    """One truncated walk from ``start``; shorter only if it hits a degree-0 node."""
    if start not in snapshot:
        raise NodeNotFound(f"start node {start} not in snapshot t={snapshot.t}")
    w = WalkSampler(snapshot).walks([start], 1, length, _seed_int(rng))[0]
    return w[w >= 0]


class PairCorpus:
    """Positive pairs ``(walk[p + i], walk[p])`` for ``0 < |i| <= window``.

    Pairs are kept implicitly as the walks themselves and enumerated in walk
    order; :meth:`counts` aggregates them into multiplicities.
    """

    def __init__(self, walks, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        if isinstance(walks, np.ndarray) and walks.ndim == 2:
            self.walks = walks.astype(np.int64, copy=False)
        else:
            walks = [np.asarray(w, dtype=np.int64) for w in walks]
            width = max((len(w) for w in walks), default=0)
            arr = np.full((len(walks), width), -1, dtype=np.int64)
            for i, w in enumerate(walks):
                arr[i, :len(w)] = w
            self.walks = arr
        self.window = int(window)

    def __len__(self):
        return self.total()

    def lengths(self) -> np.ndarray:
        if self.walks.size == 0:
            return np.zeros(len(self.walks), dtype=np.int64)
        return (self.walks >= 0).sum(axis=1)

    def total(self) -> int:
        """Number of pair occurrences, i.e. the summed multiplicity."""
        s = self.window
        total = 0
        lens, reps = np.unique(self.lengths(), return_counts=True)
        for n, c in zip(lens.tolist(), reps.tolist()):
            p = np.arange(n)
            total += c * int((np.minimum(p + s, n - 1) - np.maximum(p - s, 0)).sum())
        return total

    def pairs(self):
        s = self.window
        for w in self.walks:
            w = w[w >= 0].tolist()
            n = len(w)
            for p in range(n):
                for q in range(max(0, p - s), min(n, p + s + 1)):
                    if q != p:
                        yield (w[q], w[p])

    def counts(self) -> Counter:
        return Counter(self.pairs())

    def node_frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct nodes in the walks and their occurrence counts."""
        flat = self.walks[self.walks >= 0]
        return np.unique(flat, return_counts=True)

    def nodes(self) -> np.ndarray:
        return np.unique(self.walks[self.walks >= 0])


def build_pairs(walks, window: int) -> PairCorpus:
    return PairCorpus(walks, window)


def generate_corpus(snapshot: Snapshot, selected, config: WalkConfig, seed: int = 0,
                    threads: int | None = None) -> PairCorpus:
    """``walks_per_node`` walks from every selected node, windowed into pairs."""
    selected = np.asarray(list(selected) if not isinstance(selected, np.ndarray) else selected,
                          dtype=np.int64)
    if len(selected) == 0:
        return PairCorpus(np.zeros((0, config.walk_length), dtype=np.int64), config.window)
    if threads:
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    walks = WalkSampler(snapshot).walks(selected, config.walks_per_node, config.walk_length, seed)
    return PairCorpus(walks, config.window)


def write_walks(path, corpus_or_walks) -> None:
    """Dump walks one per line, space-separated node ids."""
    walks = corpus_or_walks.walks if isinstance(corpus_or_walks, PairCorpus) else corpus_or_walks
    with open(path, "w") as fh:
        for w in walks:
            w = np.asarray(w)
            fh.write(" ".join(map(str, w[w >= 0].tolist())) + "\n")
