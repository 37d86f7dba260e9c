import math

import numpy as np
import pytest

import lclt_lab.combinatorics as cb
from lclt_lab.errors import CapacityError, DomainError


def test_connected_graph_counts_match_known_sequence():
    for k, expected in enumerate(cb.CONNECTED_COUNTS_KNOWN[:6], start=1):
        assert cb.connected_graph_count(k) == expected


def test_connected_graph_count_seven_vertices():
    # the largest enumerable order; 2^21 candidate graphs
    assert cb.connected_graph_count(7) == 1866256


def test_connected_masks_are_connected_graphs():
    for k in (2, 3, 4):
        edges = cb.edge_list(k)
        for mask in cb.connected_graph_masks(k):
            chosen = [e for i, e in enumerate(edges) if mask >> i & 1]
            # union-find check, independent of the library's BFS
            parent = list(range(k))

            def find(a):
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            for a, b in chosen:
                parent[find(a)] = find(b)
            assert len({find(v) for v in range(k)}) == 1


def test_spanning_tree_counts_cayley():
    for k in range(2, 8):
        assert len(cb.spanning_tree_edge_sets(k)) == k ** (k - 2)


def test_spanning_trees_are_trees():
    for k in (3, 4, 5):
        seen = set()
        for edges in cb.spanning_tree_edge_sets(k):
            assert len(edges) == k - 1
            seen.add(frozenset(edges))
            touched = {v for e in edges for v in e}
            assert touched == set(range(k))
        assert len(seen) == k ** (k - 2)


def test_enumeration_caps():
    with pytest.raises(CapacityError):
        cb.connected_graph_masks(cb.MAX_ENUMERATED_VERTICES + 1)
    with pytest.raises(CapacityError):
        cb.spanning_tree_edge_sets(cb.MAX_TREE_VERTICES + 1)
    with pytest.raises(DomainError):
        cb.connected_graph_count(0)


def test_connected_sum_matches_enumeration():
    rng = np.random.default_rng(5)
    for k in (2, 3, 4, 5):
        w = rng.uniform(-0.4, 0.4, size=(k, k))
        w = w + w.T
        np.fill_diagonal(w, 0.0)
        fac = np.expm1(w)
        fast = cb.connected_sum(fac)
        slow = cb.connected_sum_by_enumeration(fac)
        assert fast == pytest.approx(slow, rel=1e-12, abs=1e-15)


def test_connected_sum_batched_configs():
    """A trailing config axis must behave like a loop over configs."""
    rng = np.random.default_rng(6)
    k, m = 4, 7
    fac = rng.uniform(-0.5, 0.5, size=(k, k, m)) + 1j * rng.uniform(-0.2, 0.2, size=(k, k, m))
    fac = fac + fac.transpose(1, 0, 2)
    for i in range(k):
        fac[i, i, :] = 0.0
    batched = cb.connected_sum(fac)
    assert batched.shape == (m,)
    for j in range(m):
        assert batched[j] == pytest.approx(cb.connected_sum(fac[:, :, j]), rel=1e-12)


def test_connected_sum_two_vertices_closed_form():
    # with one edge the only connected graph is that edge
    fac = np.array([[0.0, 0.7], [0.7, 0.0]])
    assert cb.connected_sum(fac) == pytest.approx(0.7, abs=1e-15)


def test_ursell_identical_polymers_rota():
    # k copies of one polymer give (-1)^(k-1) (k-1)!; the 1/k! belongs to
    # the series assembly, not to the coefficient itself
    r = frozenset({(0,)})
    for k in range(1, 7):
        expected = (-1) ** (k - 1) * math.factorial(k - 1)
        assert cb.ursell_hardcore([r] * k) == pytest.approx(expected, rel=1e-12)


def test_ursell_disconnected_family_vanishes():
    a = frozenset({(0,)})
    b = frozenset({(5,)})
    assert cb.ursell_hardcore([a, b]) == 0.0
    c = frozenset({(0,), (5,)})
    assert cb.ursell_hardcore([a, b, c]) != 0.0


def test_ursell_matches_enumeration():
    rng = np.random.default_rng(8)
    sites = [(i,) for i in range(5)]
    for _ in range(30):
        fam = []
        for _ in range(int(rng.integers(1, 5))):
            size = int(rng.integers(1, 3))
            picks = rng.choice(5, size=size, replace=False)
            fam.append(frozenset(sites[int(i)] for i in picks))
        fast = cb.ursell_hardcore(fam)
        slow = cb.ursell_hardcore_by_enumeration(fam)
        assert fast == pytest.approx(slow, rel=1e-12, abs=1e-15)


def test_graph_census_shape():
    rows = cb.graph_census(5)
    assert [r["k"] for r in rows] == [1, 2, 3, 4, 5]
    assert [r["connected"] for r in rows] == list(cb.CONNECTED_COUNTS_KNOWN[:5])
    assert all(r["graphs"] == 1 << r["edge_slots"] for r in rows)
    assert all(r["trees"] == r["k"] ** max(r["k"] - 2, 0) for r in rows)
