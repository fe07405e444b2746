"""Dynamic network embedding with partition-based diverse node selection."""

__version__ = "0.1.0"

from .embedding import EmbeddingTable
from .errors import (DynEmbedError, EmptyCorpus, EmptyFirstSnapshot, EmptyGraph, EmptyPart,
                     EmptyTestSet, FormatError, IncompleteAssignment, MissingArtifact,
                     NodeNotFound, ParseError, StepMismatch, TooManyParts, TrainingDiverged)
from .graph import (EdgeDelta, Snapshot, apply_delta, edge_delta, largest_connected_component,
                    per_node_change, weighted_node_change)
from .partition import PartitionAssignment, edge_cut, partition
from .pipeline import Mode, PipelineConfig, RunState, run, run_offline, run_online_step
from .select import Reservoir, SelectionConfig, Strategy, select_nodes
from .sgns import SgnsModel, TrainConfig, train, warm_start
from .walk import PairCorpus, WalkConfig, generate_corpus, random_walk

__all__ = [
    "EmbeddingTable", "DynEmbedError", "EmptyCorpus", "EmptyFirstSnapshot", "EmptyGraph",
    "EmptyPart", "EmptyTestSet", "FormatError", "IncompleteAssignment", "MissingArtifact",
    "NodeNotFound", "ParseError", "StepMismatch", "TooManyParts", "TrainingDiverged",
    "EdgeDelta", "Snapshot", "apply_delta", "edge_delta", "largest_connected_component",
    "per_node_change", "weighted_node_change", "PartitionAssignment", "edge_cut", "partition",
    "Mode", "PipelineConfig", "RunState", "run", "run_offline", "run_online_step",
    "Reservoir", "SelectionConfig", "Strategy", "select_nodes", "SgnsModel", "TrainConfig",
    "train", "warm_start", "PairCorpus", "WalkConfig", "generate_corpus", "random_walk",
]
