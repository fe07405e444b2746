from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from dynembed.errors import NodeNotFound
from dynembed.walk import (AliasTable, PairCorpus, WalkConfig, WalkSampler, build_pairs,
                           generate_corpus, random_walk, write_walks)

from conftest import snap
from strategies import snapshots


def next_nodes(s, start, reps, seed=0):
    return WalkSampler(s).walks([start], reps, 2, seed)[:, 1]


def test_path_endpoint_has_one_successor():
    s = snap([(0, 1), (1, 2)])
    assert np.all(next_nodes(s, 0, 1000) == 1)


def test_star_uniform():
    s = snap([(9, i) for i in range(4)])
    freq = (next_nodes(s, 9, 100_000) == 0).mean()
    se = np.sqrt(0.25 * 0.75 / 100_000)
    assert abs(freq - 0.25) < 3 * se


def test_weighted_neighbors():
    s = snap([(0, 1), (0, 2)], weights=[3.0, 1.0])
    freq = (next_nodes(s, 0, 100_000, seed=4) == 1).mean()
    assert abs(freq - 0.75) < 3 * np.sqrt(0.75 * 0.25 / 100_000)


def test_weighted_star_chi_square():
    w = [5.0, 1.0, 2.0, 0.5, 1.5]
    s = snap([(0, i + 1) for i in range(5)], weights=w)
    got = np.bincount(next_nodes(s, 0, 100_000, seed=11) - 1, minlength=5)
    exp = np.array(w) / sum(w) * 100_000
    assert chisquare(got, exp).pvalue > 0.001


def test_alias_table_exact_probabilities():
    assert np.allclose(AliasTable([3, 1, 2]).probabilities(), [0.5, 1 / 6, 1 / 3])
    with pytest.raises(ValueError):
        AliasTable([0, 0])


def test_random_walk_contract():
    s = snap([(0, 1), (1, 2), (2, 0), (2, 3)])
    w = random_walk(s, 3, 20, rng=5)
    assert len(w) == 20 and w[0] == 3
    assert all(s.has_edge(a, b) for a, b in zip(w, w[1:]))
    with pytest.raises(NodeNotFound):
        random_walk(s, 42, 5)


def test_isolated_start_gives_length_one():
    s = snap([(0, 1)], nodes=[0, 1, 2])
    assert random_walk(s, 2, 10).tolist() == [2]


def test_build_pairs_examples():
    assert build_pairs([[10, 11, 12]], 1).counts() == Counter({(11, 10): 1, (10, 11): 1, (12, 11): 1,
                                                               (11, 12): 1})
    assert build_pairs([[10]], 3).total() == 0
    assert build_pairs([[10, 11]], 10).counts() == Counter({(11, 10): 1, (10, 11): 1})


@given(st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=12), min_size=1, max_size=5),
       st.integers(1, 6))
def test_pair_multiset_properties(walks, s):
    c = PairCorpus(walks, s)
    counts = c.counts()
    assert sum(counts.values()) == c.total()
    for (u, v), m in counts.items():
        assert m > 0
        assert counts[(v, u)] == m
    assert c.total() <= len(walks) * max(map(len, walks)) * 2 * s


def test_generate_corpus_counts():
    s = snap([(i, (i + 1) % 8) for i in range(8)])
    c = generate_corpus(s, [0, 1, 2, 3, 4], WalkConfig(10, 6, 2), seed=0)
    assert len(c.walks) == 50
    k3 = snap([(0, 1), (1, 2), (0, 2)])
    assert generate_corpus(k3, [0, 1, 2], WalkConfig(1, 2, 1), seed=0).total() == 6
    assert generate_corpus(k3, [], WalkConfig(1, 2, 1)).total() == 0


def test_generate_corpus_unknown_node():
    with pytest.raises(NodeNotFound):
        generate_corpus(snap([(0, 1)]), [5], WalkConfig(1, 3, 1))


@given(snapshots(max_nodes=15), st.integers(0, 1000))
def test_walks_have_full_length_without_isolated_nodes(s, seed):
    w = WalkSampler(s).walks(s.nodes, 2, 7, seed)
    assert np.all(w >= 0)
    for row in w:
        assert all(s.has_edge(a, b) for a, b in zip(row, row[1:]))


def test_walks_deterministic_and_order_independent():
    s = snap([(i, (i * 7 + 3) % 30) for i in range(30)] + [(i, i + 1) for i in range(29)])
    a = WalkSampler(s).walks([3, 8, 12], 4, 10, seed=7)
    b = WalkSampler(s).walks([12, 3, 8], 4, 10, seed=7)
    # rows are repetition-major: row rep*n + i belongs to start i
    for i, start in enumerate([3, 8, 12]):
        j = [12, 3, 8].index(start)
        for rep in range(4):
            assert np.array_equal(a[rep * 3 + i], b[rep * 3 + j])


def test_walk_config_validation():
    for bad in [(0, 5, 1), (1, 1, 1), (1, 5, 5), (1, 5, 0)]:
        with pytest.raises(ValueError):
            WalkConfig(*bad)


def test_write_walks(tmp_path):
    p = tmp_path / "w.txt"
    write_walks(p, PairCorpus([[1, 2, 3], [4]], 1))
    assert p.read_text() == "1 2 3\n4\n"
