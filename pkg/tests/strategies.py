"""Hypothesis strategies for random graphs."""
import numpy as np
from hypothesis import strategies as st

from dynembed.graph import Snapshot


@st.composite
def edge_lists(draw, max_nodes=12, min_nodes=2):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=len(pairs), unique=True))
    return n, chosen


@st.composite
def snapshots(draw, max_nodes=12, t=0):
    _, edges = draw(edge_lists(max_nodes))
    return Snapshot.from_edges(t, np.array(edges))
