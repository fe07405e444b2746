"""Edge streams and snapshot directories to snapshot sequences; embedding files.

External labels are interned to dense integer ids in first-seen order, shared
by every snapshot of a run.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbeddingTable
from .errors import EmptyFirstSnapshot, FormatError, ParseError
from .graph import Snapshot, canonical_edges, largest_connected_component

log = logging.getLogger(__name__)

DAY = 86400


class LabelInterner:
    """Bijective map between external string labels and dense ids."""

    def __init__(self, labels=()):
        self._ids: dict[str, int] = {}
        self._labels: list[str] = []
        for lab in labels:
            self.intern(lab)

    def __len__(self):
        return len(self._labels)

    def __contains__(self, label):
        return str(label) in self._ids

    def intern(self, label) -> int:
        label = str(label)
        i = self._ids.get(label)
        if i is None:
            i = self._ids[label] = len(self._labels)
            self._labels.append(label)
        return i

    def id_of(self, label) -> int:
        try:
            return self._ids[str(label)]
        except KeyError:
            raise KeyError(f"unknown label {label!r}") from None

    def label(self, node: int) -> str:
        return self._labels[node]

    def labels(self) -> list[str]:
        return list(self._labels)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for lab in self._labels:
                fh.write(lab + "\n")

    @classmethod
    def load(cls, path) -> "LabelInterner":
        with open(path) as fh:
            return cls(line.rstrip("\n") for line in fh)


@dataclass(frozen=True)
class EdgeEvent:
    src: str
    dst: str
    timestamp: int
    weight: float = 1.0


@dataclass(frozen=True)
class SnapshotSpec:
    cutoffs: tuple[int, ...]
    keep_last: int | None = None

    def __post_init__(self):
        cut = tuple(int(c) for c in self.cutoffs)
        if not cut:
            raise ValueError("need at least one cutoff")
        if any(b <= a for a, b in zip(cut, cut[1:])):
            raise ValueError("cutoffs must be strictly increasing")
        if self.keep_last is not None and self.keep_last < 1:
            raise ValueError("keep_last must be >= 1")
        object.__setattr__(self, "cutoffs", cut)

    @classmethod
    def every(cls, events, days: float, count: int | None = None,
              keep_last: int | None = None) -> "SnapshotSpec":
        """Cutoffs every ``days`` days starting from the first event.

        Without ``count`` the cutoffs run until one covers the last event.
        """
        ts = [e.timestamp for e in events]
        if not ts:
            raise ValueError("no events")
        first, last = min(ts), max(ts)
        gap = days * DAY
        if count is None:
            count = max(1, int(np.ceil((last - first) / gap)) + 1)
        return cls(tuple(int(first + i * gap) for i in range(count)), keep_last)


def _is_comment(line: str) -> bool:
    s = line.strip()
    return not s or s[0] in "#%"


def read_edge_stream(path) -> list[EdgeEvent]:
    """Parse ``src dst timestamp [weight]`` lines; ``#``/``%`` lines are comments."""
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if _is_comment(line):
                continue
            tok = line.split()
            if len(tok) not in (3, 4):
                raise ParseError(path, lineno, f"expected 'src dst timestamp [weight]', got {line.strip()!r}")
            try:
                ts = int(float(tok[2]))
                w = float(tok[3]) if len(tok) == 4 else 1.0
            except ValueError:
                raise ParseError(path, lineno, f"bad number in {line.strip()!r}") from None
            events.append(EdgeEvent(tok[0], tok[1], ts, w))
    return events


def build_snapshots(events, spec: SnapshotSpec, interner: LabelInterner | None = None,
                    weighted: bool = False) -> list[Snapshot]:
    """Cumulative snapshots at each cutoff, each reduced to its largest component.

    Events are sorted by timestamp (stable) before labels are interned, so
    ids follow first appearance in time.  Self-loops and repeated pairs are
    dropped; with ``weighted`` the first occurrence's weight is kept.
    """
    events = sorted(events, key=lambda e: e.timestamp)
    if not events:
        raise EmptyFirstSnapshot("no events")
    interner = interner if interner is not None else LabelInterner()
    ts = np.array([e.timestamp for e in events], dtype=np.int64)
    edges = np.array([(interner.intern(e.src), interner.intern(e.dst)) for e in events],
                     dtype=np.int64)
    weights = np.array([e.weight for e in events]) if weighted else np.ones(len(events))

    loops = int((edges[:, 0] == edges[:, 1]).sum())
    if loops:
        log.warning("dropped %d self-loop events", loops)

    snapshots = []
    for i, cut in enumerate(spec.cutoffs):
        m = int(np.searchsorted(ts, cut, side="right"))
        if m == 0 or (i == 0 and not np.any(edges[:m, 0] != edges[:m, 1])):
            raise EmptyFirstSnapshot(f"no edge at or before the first cutoff {cut}")
        e, w, dropped = canonical_edges(edges[:m], weights[:m])
        if i == len(spec.cutoffs) - 1 and dropped > loops:
            log.info("collapsed %d repeated edge events", dropped - loops)
        snapshots.append(largest_connected_component(Snapshot.from_edges(i, e, w)))
    if spec.keep_last is not None:
        snapshots = [s.with_step(t) for t, s in enumerate(snapshots[-spec.keep_last:])]
    return snapshots


def load_snapshot_list(directory, interner: LabelInterner | None = None,
                       weighted: bool = False) -> list[Snapshot]:
    """One LCC-reduced snapshot per file, in lexicographic file-name order.

    Lines are ``src dst`` with an optional third weight column.
    """
    interner = interner if interner is not None else LabelInterner()
    files = sorted(f for f in os.listdir(directory)
                   if not f.startswith(".") and os.path.isfile(os.path.join(directory, f)))
    snapshots = []
    for t, name in enumerate(files):
        path = Path(directory) / name
        edges, weights = [], []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if _is_comment(line):
                    continue
                tok = line.split()
                if len(tok) not in (2, 3):
                    raise ParseError(path, lineno, f"expected 'src dst [weight]', got {line.strip()!r}")
                w = 1.0
                if len(tok) == 3:
                    try:
                        w = float(tok[2])
                    except ValueError:
                        raise ParseError(path, lineno, f"bad weight {tok[2]!r}") from None
                edges.append((interner.intern(tok[0]), interner.intern(tok[1])))
                weights.append(w if weighted else 1.0)
        e = np.array(edges, dtype=np.int64).reshape(-1, 2)
        e, w, _ = canonical_edges(e, np.array(weights))
        snapshots.append(largest_connected_component(Snapshot.from_edges(t, e, w)))
    return snapshots


def write_embeddings(path, table: EmbeddingTable, labels: LabelInterner | None = None) -> None:
    """Header ``N d``, then ``label v1 ... vd`` per node with round-trip floats."""
    with open(path, "w") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for node, vec in zip(table.nodes.tolist(), table.vectors.tolist()):
            lab = labels.label(node) if labels is not None else str(node)
            fh.write(lab + " " + " ".join(map(repr, vec)) + "\n")


def read_embeddings(path, labels: LabelInterner | None = None) -> EmbeddingTable:
    """Inverse of :func:`write_embeddings`.

    Labels are resolved through ``labels`` when given, else parsed as ids.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: header must be 'N d'")
        try:
            n, d = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: header must be 'N d'") from None
        nodes = np.empty(n, dtype=np.int64)
        vectors = np.empty((n, d))
        count = 0
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            tok = line.split()
            if len(tok) != d + 1:
                raise FormatError(f"{path}:{lineno}: expected {d} values, got {len(tok) - 1}")
            if count >= n:
                raise FormatError(f"{path}: more than {n} rows")
            try:
                nodes[count] = labels.id_of(tok[0]) if labels is not None else int(tok[0])
                vectors[count] = [float(x) for x in tok[1:]]
            except (ValueError, KeyError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            count += 1
    if count != n:
        raise FormatError(f"{path}: header says {n} rows, found {count}")
    return EmbeddingTable(nodes, vectors)
