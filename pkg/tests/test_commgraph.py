import itertools
import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from flockplan.commgraph import (
    CommGraph,
    build_graph,
    diameter,
    hop_distances,
    influence,
    influences,
    is_connected,
)
from flockplan.core import ContractViolation, Vec2

points = st.lists(
    st.tuples(st.floats(0, 100), st.floats(0, 100)).map(lambda t: Vec2(*t)), min_size=2, max_size=15
)


def _nx(g: CommGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def test_boundary_is_inclusive():
    g = build_graph([Vec2(0, 0), Vec2(15, 0), Vec2(30.0001, 0)], 15.0)
    assert g.neighbors(0) == {1}
    assert g.neighbors(1) == {0}
    assert g.neighbors(2) == frozenset()


def test_influence_is_degree_over_n():
    g = CommGraph.from_edges(3, [(0, 1), (1, 2)])
    assert influences(g) == pytest.approx([1 / 3, 2 / 3, 1 / 3])
    assert influence(g, 1) == pytest.approx(2 / 3)
    with pytest.raises(ContractViolation):
        influence(g, 3)


def test_graph_validation():
    with pytest.raises(ContractViolation):
        CommGraph(0, (frozenset({1}), frozenset()))
    with pytest.raises(ContractViolation):
        CommGraph(0, (frozenset({0}),))
    with pytest.raises(ContractViolation):
        build_graph([Vec2(0, 0)], 15)


@settings(max_examples=200)
@given(points, st.floats(1, 60))
def test_build_graph_matches_brute_force(pts, r):
    g = build_graph(pts, r)
    for i, j in itertools.combinations(range(len(pts)), 2):
        assert (j in g.neighbors(i)) == (pts[i].dist(pts[j]) <= r)
    assert all(0 <= x <= (len(pts) - 1) / len(pts) for x in influences(g))


def _union_find_connected(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    return len({find(i) for i in range(n)}) == 1


def test_connectivity_and_diameter_against_oracles():
    rng = random.Random(3)
    for _ in range(300):
        n = rng.randint(1, 9)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.35]
        g = CommGraph.from_edges(n, edges)
        h = _nx(g)
        assert is_connected(g) == _union_find_connected(n, edges)
        if is_connected(g):
            assert diameter(g) == nx.diameter(h)
            lengths = nx.single_source_shortest_path_length(h, 0)
            assert hop_distances(g, 0) == [lengths[i] for i in range(n)]
        else:
            assert diameter(g) is None
