"""Offline stage, online loop and the baseline training modes.

At ``t = 0`` every node starts walks and a fresh model is trained.  Each later
step partitions the current snapshot into ``K = round(alpha * |V|)`` parts,
picks one representative per part by change score, walks from those nodes and
continues training the previous model on the new corpus.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .embedding import EmbeddingTable
from .errors import EmptyGraph
from .graph import Snapshot, edge_delta
from .partition import partition
from .select import Reservoir, SelectionConfig, Strategy, n_select, select_nodes
from .sgns import SgnsModel, TrainConfig, train, warm_start
from .walk import WalkConfig, generate_corpus


class Mode(str, Enum):
    DIVERSE = "diverse"  # partition + change-scored representatives
    INCREMENT_ALL = "increment_all"  # warm start, walks from every node
    RETRAIN = "retrain"  # fresh model every step
    STATIC = "static"  # train once at t=0, reuse forever


# fixed component ids for seed derivation; never renumber
_COMPONENTS = {"init": 0, "partition": 1, "select": 2, "walk": 3, "train": 4}


def derive_seed(seed: int, t: int, component: str) -> int:
    """Per-step, per-component seed: ``SeedSequence([seed, t, id])`` -> 63-bit int.

    Changing how one stage consumes randomness never shifts another stage's
    stream.
    """
    ss = np.random.SeedSequence([int(seed), int(t), _COMPONENTS[component]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float = 0.1
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    negatives: int = 5
    dim: int = 128
    epsilon: float = 0.1
    mode: Mode = Mode.DIVERSE
    strategy: Strategy = Strategy.S4
    seed: int = 0
    threads: int = 1
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    epochs: int = 1
    unigram_power: float = 0.75
    weighted_change: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        # component configs validate their own fields
        self.walk_config()
        self.train_config()
        self.selection_config()
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    def walk_config(self) -> WalkConfig:
        return WalkConfig(self.walks_per_node, self.walk_length, self.window)

    def train_config(self) -> TrainConfig:
        return TrainConfig(negatives=self.negatives, learning_rate=self.learning_rate,
                           min_learning_rate=self.min_learning_rate, epochs=self.epochs,
                           unigram_power=self.unigram_power, threads=self.threads)

    def selection_config(self) -> SelectionConfig:
        return SelectionConfig(self.alpha, self.strategy, self.weighted_change)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["strategy"] = self.strategy.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(**d)


@dataclass
class StepTiming:
    step: int
    mode: str
    num_nodes: int
    num_selected: int
    select_seconds: float  # partition + selection
    walk_seconds: float
    train_seconds: float

    @property
    def total_seconds(self) -> float:
        return self.select_seconds + self.walk_seconds + self.train_seconds

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total_seconds"] = self.total_seconds
        return d


@dataclass
class RunState:
    model: SgnsModel
    reservoir: Reservoir
    prev_snapshot: Snapshot | None = None
    outputs: dict[int, EmbeddingTable] = field(default_factory=dict)
    timings: list[StepTiming] = field(default_factory=list)
    selected: dict[int, np.ndarray] = field(default_factory=dict)


# called as hook(t, model) right before training at step t
TrainHook = Callable[[int, SgnsModel], None]


def _train_on(model: SgnsModel, snapshot: Snapshot, selected, config: PipelineConfig,
              hook: TrainHook | None):
    t = snapshot.t
    t0 = time.perf_counter()
    corpus = generate_corpus(snapshot, selected, config.walk_config(),
                             seed=derive_seed(config.seed, t, "walk"), threads=config.threads)
    t1 = time.perf_counter()
    if hook is not None:
        hook(t, model)
    # a corpus of isolated starts has no pairs; the model just carries over
    if corpus.total() > 0:
        train(model, corpus, config.train_config(), seed=derive_seed(config.seed, t, "train"))
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1


def run_offline(g0: Snapshot, config: PipelineConfig = PipelineConfig(),
                hook: TrainHook | None = None) -> RunState:
    """Train a fresh model from walks rooted at every node of ``g0``."""
    if g0.num_nodes == 0:
        raise EmptyGraph(f"snapshot t={g0.t} has no nodes")
    model = SgnsModel(config.dim)
    model.add_nodes(g0.nodes, seed=derive_seed(config.seed, g0.t, "init"))
    walk_s, train_s = _train_on(model, g0, g0.nodes, config, hook)
    state = RunState(model=model, reservoir=Reservoir(step=g0.t), prev_snapshot=g0)
    state.outputs[g0.t] = model.embeddings(g0.nodes)
    state.selected[g0.t] = g0.nodes
    state.timings.append(StepTiming(g0.t, config.mode.value, g0.num_nodes, g0.num_nodes,
                                    0.0, walk_s, train_s))
    return state


def run_online_step(state: RunState, gt: Snapshot, config: PipelineConfig = PipelineConfig(),
                    hook: TrainHook | None = None) -> RunState:
    """Advance ``state`` by one snapshot; mutates and returns ``state``."""
    if gt.num_nodes == 0:
        raise EmptyGraph(f"snapshot t={gt.t} has no nodes")
    prev = state.prev_snapshot
    t = gt.t
    mode = config.mode
    select_s = walk_s = train_s = 0.0
    selected = np.zeros(0, dtype=np.int64)

    if mode is Mode.RETRAIN:
        fresh = run_offline(gt, config, hook)
        fresh.outputs = {**state.outputs, **fresh.outputs}
        fresh.timings = state.timings + fresh.timings
        fresh.selected = {**state.selected, **fresh.selected}
        return fresh

    delta = edge_delta(prev, gt)
    if mode is Mode.STATIC:
        # new nodes keep their untrained initial vectors
        state.model.add_nodes(gt.nodes, seed=derive_seed(config.seed, t, "init"))
        state.reservoir = Reservoir(step=t)
    else:
        t0 = time.perf_counter()
        model = warm_start(state.model, gt, seed=derive_seed(config.seed, t, "init"))
        if mode is Mode.INCREMENT_ALL:
            selected = gt.nodes
            state.reservoir = Reservoir(step=t)
        else:
            sel_cfg = config.selection_config()
            assignment = None
            if sel_cfg.strategy is Strategy.S4:
                k = n_select(sel_cfg.alpha, gt.num_nodes)
                assignment = partition(gt, k, config.epsilon,
                                       seed=derive_seed(config.seed, t, "partition"))
            selected, state.reservoir = select_nodes(sel_cfg, gt, assignment, state.reservoir,
                                                     delta, prev,
                                                     seed=derive_seed(config.seed, t, "select"))
        select_s = time.perf_counter() - t0
        walk_s, train_s = _train_on(model, gt, selected, config, hook)
        state.model = model

    state.prev_snapshot = gt
    state.selected[t] = np.asarray(selected, dtype=np.int64)
    state.outputs[t] = state.model.embeddings(gt.nodes)
    state.timings.append(StepTiming(t, mode.value, gt.num_nodes, len(selected),
                                    select_s, walk_s, train_s))
    return state


def run(snapshots, config: PipelineConfig = PipelineConfig(),
        hook: TrainHook | None = None) -> RunState:
    """Offline stage on the first snapshot, then one online step per later snapshot."""
    snapshots = list(snapshots)
    if not snapshots:
        raise ValueError("need at least one snapshot")
    state = run_offline(snapshots[0], config, hook)
    for gt in snapshots[1:]:
        state = run_online_step(state, gt, config, hook)
    return state
