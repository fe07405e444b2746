"""Node-to-vector table exchanged between training, evaluation and files."""
from __future__ import annotations

import numpy as np

from .errors import NodeNotFound


class EmbeddingTable:
    """Rows of ``vectors`` are the embeddings of the sorted ``nodes``."""

    def __init__(self, nodes, vectors):
        nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(vectors) != len(nodes):
            raise ValueError("need one vector row per node")
        order = np.argsort(nodes, kind="stable")
        self.nodes = nodes[order]
        self.vectors = vectors[order]
        if len(np.unique(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node ids")

    @classmethod
    def from_dict(cls, mapping: dict, dim: int | None = None) -> "EmbeddingTable":
        if not mapping:
            return cls(np.zeros(0, dtype=np.int64), np.zeros((0, dim or 0)))
        nodes = list(mapping)
        return cls(nodes, np.array([mapping[v] for v in nodes], dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node):
        i = np.searchsorted(self.nodes, node)
        return bool(i < len(self.nodes) and self.nodes[i] == node)

    def rows(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
        if len(self.nodes) == 0:
            if len(nodes):
                raise NodeNotFound(f"node {int(nodes[0])} has no embedding")
            return nodes
        idx = np.searchsorted(self.nodes, nodes)
        idx_c = np.minimum(idx, len(self.nodes) - 1)
        bad = self.nodes[idx_c] != nodes
        if np.any(bad):
            raise NodeNotFound(f"node {int(nodes[bad][0])} has no embedding")
        return idx_c

    def vector(self, node) -> np.ndarray:
        return self.vectors[self.rows([node])[0]]

    def subset(self, nodes) -> "EmbeddingTable":
        rows = self.rows(nodes)
        return EmbeddingTable(self.nodes[rows], self.vectors[rows])

    def as_dict(self) -> dict[int, np.ndarray]:
        return {int(v): self.vectors[i] for i, v in enumerate(self.nodes)}

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.vectors, other.vectors)

    __hash__ = None

    def __repr__(self):
        return f"EmbeddingTable(n={len(self)}, dim={self.dim})"
