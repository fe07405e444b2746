"""Skip-gram with negative sampling over node pairs, trained incrementally.

The model keeps two matrices: center vectors (the published embeddings) and
context vectors (internal).  A positive pair ``(i, j)`` with negatives ``n``
has loss

    -log sigmoid(c_i . o_j) - sum_n log sigmoid(-c_i . o_n)

and every SGD step is an exact gradient step on that loss.  Models are only
ever grown: nodes that vanish from a snapshot keep their rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .embedding import EmbeddingTable
from .errors import EmptyCorpus, NodeNotFound, TrainingDiverged
from .graph import Snapshot
from .walk import PairCorpus, _alias_sample, _build_alias, alias_draw, stream_seed

NEGATIVE_RETRIES = 10


@dataclass(frozen=True)
class TrainConfig:
    negatives: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    epochs: int = 1
    unigram_power: float = 0.75
    threads: int = 1
    norm_cap: float = 1e4

    def __post_init__(self):
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.learning_rate <= 0 or self.min_learning_rate < 0:
            raise ValueError("learning rates must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.unigram_power <= 1.0:
            raise ValueError("unigram_power must lie in [0, 1]")


class SgnsModel:
    """Center/context vectors for every node ever seen.

    Rows are appended as nodes arrive; ``known_nodes`` lists ids in row order.
    """

    def __init__(self, dim: int = 128):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self._center = np.zeros((0, self.dim))
        self._context = np.zeros((0, self.dim))
        self._ids = np.zeros(0, dtype=np.int64)
        self._sorted = np.zeros(0, dtype=np.int64)
        self._sorted_rows = np.zeros(0, dtype=np.int64)
        self.updates = 0  # pair SGD steps applied by train()

    # -- storage --------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._ids)

    @property
    def known_nodes(self) -> np.ndarray:
        return self._ids

    @property
    def center_vectors(self) -> np.ndarray:
        return self._center[:self.n]

    @property
    def context_vectors(self) -> np.ndarray:
        return self._context[:self.n]

    def __contains__(self, node) -> bool:
        i = np.searchsorted(self._sorted, node)
        return bool(i < len(self._sorted) and self._sorted[i] == node)

    def rows(self, nodes) -> np.ndarray:
        """Row indices of ``nodes``; -1 entries map to -1."""
        nodes = np.asarray(nodes, dtype=np.int64)
        flat = nodes.reshape(-1)
        out = np.full(flat.shape, -1, dtype=np.int64)
        want = flat >= 0
        if np.any(want):
            if self.n == 0:
                raise NodeNotFound(f"node {int(flat[want][0])} unknown to the model")
            pos = np.minimum(np.searchsorted(self._sorted, flat[want]), self.n - 1)
            bad = self._sorted[pos] != flat[want]
            if np.any(bad):
                raise NodeNotFound(f"node {int(flat[want][bad][0])} unknown to the model")
            out[want] = self._sorted_rows[pos]
        return out.reshape(nodes.shape)

    def row(self, node) -> int:
        return int(self.rows([node])[0])

    def center(self, node) -> np.ndarray:
        return self._center[self.row(node)]

    def context(self, node) -> np.ndarray:
        return self._context[self.row(node)]

    def set_vectors(self, node, center=None, context=None) -> None:
        r = self.row(node)
        if center is not None:
            self._center[r] = center
        if context is not None:
            self._context[r] = context

    def add_nodes(self, nodes, seed=None) -> np.ndarray:
        """Append unseen nodes (sorted) with fresh vectors; returns the ids added.

        Center entries are uniform in ``[-0.5/dim, 0.5/dim]``, context vectors
        start at zero.
        """
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        new = nodes[~np.isin(nodes, self._ids)]
        if len(new) == 0:
            return new
        rng = np.random.default_rng(seed)
        half = 0.5 / self.dim
        fresh = rng.uniform(-half, half, size=(len(new), self.dim))
        self._center = np.vstack([self.center_vectors, fresh])
        self._context = np.vstack([self.context_vectors, np.zeros((len(new), self.dim))])
        self._ids = np.concatenate([self._ids, new])
        order = np.argsort(self._ids, kind="stable")
        self._sorted = self._ids[order]
        self._sorted_rows = order
        return new

    def copy(self) -> "SgnsModel":
        m = SgnsModel(self.dim)
        m._center = self.center_vectors.copy()
        m._context = self.context_vectors.copy()
        m._ids = self._ids.copy()
        m._sorted = self._sorted.copy()
        m._sorted_rows = self._sorted_rows.copy()
        m.updates = self.updates
        return m

    def embeddings(self, nodes=None) -> EmbeddingTable:
        """Center vectors of ``nodes`` (default: all known nodes)."""
        nodes = self._ids if nodes is None else np.asarray(nodes, dtype=np.int64)
        return EmbeddingTable(nodes, self._center[self.rows(nodes)].copy())

    def check_finite(self, norm_cap: float = math.inf) -> None:
        c, o = self.center_vectors, self.context_vectors
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(o))):
            raise TrainingDiverged("non-finite embedding entries")
        if self.n and np.sqrt((c * c).sum(axis=1)).max() > norm_cap:
            raise TrainingDiverged(f"embedding norm exceeded cap {norm_cap}")


# -- loss and gradients ---------------------------------------------------


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def positive_prob(model: SgnsModel, i, j) -> float:
    """Probability that ``(i, j)`` is an observed pair."""
    return float(sigmoid(model.center(i) @ model.context(j)))


def pair_loss(model: SgnsModel, i, j, negatives) -> float:
    ci = model.center(i)
    loss = -_log_sigmoid(ci @ model.context(j))
    for n in negatives:
        loss -= _log_sigmoid(-(ci @ model.context(n)))
    return float(loss)


def pair_gradients(model: SgnsModel, i, j, negatives) -> dict:
    """Analytic gradient of :func:`pair_loss`.

    Keys are ``("center", node)`` and ``("context", node)``; repeated nodes
    accumulate.
    """
    ci = model.center(i)
    oj = model.context(j)
    g_pos = float(sigmoid(ci @ oj)) - 1.0
    grads = {("center", i): g_pos * oj, ("context", j): g_pos * ci}
    for n in negatives:
        on = model.context(n)
        g = float(sigmoid(ci @ on))
        grads[("center", i)] = grads[("center", i)] + g * on
        key = ("context", n)
        grads[key] = grads.get(key, 0.0) + g * ci
    return grads


@njit(cache=True, inline="always")
def _sig(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def _sgd_pair(C, O, ri, rj, negs, nneg, lr, neu, coef):
    """One exact gradient step on the pair loss, all terms from old values."""
    d = C.shape[1]
    x = 0.0
    for t in range(d):
        x += C[ri, t] * O[rj, t]
    g_pos = lr * (1.0 - _sig(x))
    for k in range(nneg):
        rn = negs[k]
        x = 0.0
        for t in range(d):
            x += C[ri, t] * O[rn, t]
        coef[k] = -lr * _sig(x)
    for t in range(d):
        acc = g_pos * O[rj, t]
        for k in range(nneg):
            acc += coef[k] * O[negs[k], t]
        neu[t] = acc
    for t in range(d):
        O[rj, t] += g_pos * C[ri, t]
    for k in range(nneg):
        rn = negs[k]
        for t in range(d):
            O[rn, t] += coef[k] * C[ri, t]
    for t in range(d):
        C[ri, t] += neu[t]


def sgd_step(model: SgnsModel, i, j, negatives, lr: float) -> SgnsModel:
    """Apply one SGD step in place and return the model."""
    negs = model.rows(list(negatives)).astype(np.int64)
    _sgd_pair(model._center, model._context, model.row(i), model.row(j), negs, len(negs),
              float(lr), np.empty(model.dim), np.empty(max(1, len(negs))))
    return model


# -- negative sampling and training ----------------------------------------


class NegativeTable:
    """Noise distribution over corpus nodes, proportional to ``frequency ** power``."""

    def __init__(self, corpus: PairCorpus, power: float = 0.75):
        self.nodes, freq = corpus.node_frequencies()
        if len(self.nodes) == 0:
            raise EmptyCorpus("corpus has no nodes")
        w = freq.astype(np.float64) ** power
        self.probabilities = w / w.sum()
        self.prob, self.alias = _build_alias(np.array([0, len(w)]), self.probabilities)

    def sample(self, size: int, seed: int = 0) -> np.ndarray:
        return self.nodes[_alias_sample(self.prob, self.alias, size, np.uint64(stream_seed(seed, 1, 0)))]


@njit(cache=True)
def _draw_negatives(state, prob, alias, neg_rows, rj, q, out):
    n = len(prob)
    for k in range(q):
        tries = 0
        while True:
            state, idx = alias_draw(prob, alias, 0, n, state)
            r = neg_rows[idx]
            tries += 1
            if r != rj or tries > NEGATIVE_RETRIES:
                break
        out[k] = r
    return state


@njit(cache=True)
def _train_walks(C, O, walks, lo_w, hi_w, window, prob, alias, neg_rows, q,
                 lr0, lr_min, done0, total, state):
    d = C.shape[1]
    neu = np.empty(d)
    coef = np.empty(q)
    negs = np.empty(q, dtype=np.int64)
    done = done0
    length = walks.shape[1]
    for w in range(lo_w, hi_w):
        n = 0
        while n < length and walks[w, n] >= 0:
            n += 1
        for p in range(n):
            rj = walks[w, p]
            a = max(0, p - window)
            b = min(n, p + window + 1)
            for s in range(a, b):
                if s == p:
                    continue
                ri = walks[w, s]
                lr = lr0 - (lr0 - lr_min) * (done / total)
                if lr < lr_min:
                    lr = lr_min
                state = _draw_negatives(state, prob, alias, neg_rows, rj, q, negs)
                _sgd_pair(C, O, ri, rj, negs, q, lr, neu, coef)
                done += 1
    return done


@njit(cache=True, parallel=True)
def _train_parallel(C, O, walks, bounds, window, prob, alias, neg_rows, q,
                    lr0, lr_min, offsets, total, seed):
    # unsynchronized shared updates; overlapping rows are last-write-wins
    for sh in prange(len(bounds) - 1):
        state = stream_seed(seed, 7, sh)
        _train_walks(C, O, walks, bounds[sh], bounds[sh + 1], window, prob, alias,
                     neg_rows, q, lr0, lr_min, offsets[sh], total, state)


def train(model: SgnsModel, corpus: PairCorpus, config: TrainConfig = TrainConfig(),
          seed: int = 0) -> SgnsModel:
    """Run ``config.epochs`` passes of SGD over the corpus, in place.

    Every pair occurrence gets ``negatives`` noise nodes (re-drawn up to 10
    times when they hit the positive context).  The learning rate falls
    linearly from ``learning_rate`` to ``min_learning_rate`` over the whole
    call.  With ``threads == 1`` the result is bit-reproducible for a seed;
    more threads shard the walks and are not.
    """
    total_pairs = corpus.total()
    if total_pairs == 0:
        raise EmptyCorpus("no positive pairs to train on")
    rows = model.rows(corpus.walks)
    table = NegativeTable(corpus, config.unigram_power)
    neg_rows = model.rows(table.nodes)
    q = config.negatives
    total = float(total_pairs * config.epochs)
    state = np.uint64(stream_seed(seed, 3, 0))
    done = 0
    for _ in range(config.epochs):
        if config.threads > 1:
            numba.set_num_threads(min(config.threads, numba.config.NUMBA_NUM_THREADS))
            n_sh = config.threads
            bounds = np.linspace(0, len(rows), n_sh + 1).astype(np.int64)
            per_walk = total_pairs / max(1, len(rows))
            offsets = (done + bounds[:-1] * per_walk).astype(np.float64)
            _train_parallel(model._center, model._context, rows, bounds, corpus.window,
                            table.prob, table.alias, neg_rows, q, config.learning_rate,
                            config.min_learning_rate, offsets, total,
                            np.uint64((seed + done) & 0xFFFFFFFFFFFFFFFF))
            done += total_pairs
        else:
            # streams differ per epoch because the state carries over
            done = _train_walks(model._center, model._context, rows, 0, len(rows), corpus.window,
                                table.prob, table.alias, neg_rows, q, config.learning_rate,
                                config.min_learning_rate, float(done), total, state)
            state = np.uint64(stream_seed(seed, 3, int(done)))
    model.updates += int(done)
    model.check_finite(config.norm_cap)
    return model


def warm_start(prev_model: SgnsModel, curr_snapshot: Snapshot, seed=None) -> SgnsModel:
    """Copy of ``prev_model`` extended with fresh rows for unseen snapshot nodes."""
    model = prev_model.copy()
    model.add_nodes(curr_snapshot.nodes, seed)
    return model
