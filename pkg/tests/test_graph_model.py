import itertools

import numpy as np
import pytest

from coding.ia_verify import check_fractional_local_coloring
from coloring.coloring_algorithms import greedy_sli, local_color_counts
from graphs.graph_model import (
    ConflictGraph,
    TopologyInstance,
    build_conflict_graph,
    closed_in_neighborhood,
    five_pair_alignment_topology,
    five_pair_vector_topology,
    four_pair_subspace_topology,
    graph_from_json,
    graph_to_json,
    merge_split_coloring,
    node_splitting_graph,
    topology_from_json,
    topology_to_json,
)
from tests.oracles import brute_force_chromatic


def test_conflict_edge_iff_source_reaches_other_destination():
    topo = TopologyInstance(
        num_sources=3,
        num_destinations=3,
        links=frozenset({(0, 0), (1, 1), (2, 2), (0, 1), (2, 0)}),
        demands=((0, 0), (1, 1), (2, 2)),
    )
    g = build_conflict_graph(topo)
    assert g.num_nodes == 3
    assert g.edges == frozenset({(0, 1), (2, 0)})
    assert g.node_labels == ((0, 0), (1, 1), (2, 2))


def test_fourth_message_hears_first_and_third():
    g = build_conflict_graph(five_pair_alignment_topology())
    assert g.in_neighbors[3] == frozenset({0, 2})
    nb = closed_in_neighborhood(g, 3)
    assert nb.open_in == frozenset({0, 2})
    assert nb.closed_in == frozenset({0, 2, 3})


def test_vector_example_neighborhoods():
    g = build_conflict_graph(five_pair_vector_topology())
    assert g.in_neighbors[4] == frozenset({0, 3})
    assert g.in_neighbors[1] == frozenset({0, 2})
    assert len(g.undirected_edges) == 5


def test_subspace_example_is_cycle_into_sink():
    g = build_conflict_graph(four_pair_subspace_topology())
    assert {(0, 1), (1, 2), (2, 0)} <= g.edges
    assert g.in_neighbors[3] == frozenset({0, 1, 2})
    assert brute_force_chromatic(g.num_nodes, g.edges) == 4


def test_empty_demands_give_empty_graph():
    topo = TopologyInstance(2, 2, frozenset({(0, 1)}), ())
    g = build_conflict_graph(topo)
    assert g.num_nodes == 0
    assert g.empty_warning


@pytest.mark.parametrize(
    "demands",
    [((0, 0), (0, 1)), ((0, 1), (1, 1))],
)
def test_demands_must_be_matching(demands):
    links = frozenset({(0, 0), (0, 1), (1, 1)})
    with pytest.raises(ValueError):
        TopologyInstance(2, 2, links, demands)


def test_demand_must_be_a_link():
    with pytest.raises(ValueError):
        TopologyInstance(2, 2, frozenset({(0, 0)}), ((1, 1),))


def test_closed_in_neighborhood_rejects_bad_index():
    g = ConflictGraph(2, frozenset({(0, 1)}))
    with pytest.raises(ValueError):
        closed_in_neighborhood(g, 2)


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        ConflictGraph(2, frozenset({(1, 1)}))


def test_node_splitting_structure():
    g = ConflictGraph(2, frozenset({(0, 1)}))
    split = node_splitting_graph(g, 3)
    assert split.num_nodes == 6
    # every copy of node 0 reaches every copy of node 1
    assert all((i, 3 + j) in split.edges for i in range(3) for j in range(3))
    # copies of one node form a directed clique
    assert all((i, j) in split.edges for i in range(3) for j in range(3) if i != j)
    assert len(split.edges) == 9 + 6 + 6


def test_node_splitting_rejects_zero():
    with pytest.raises(ValueError):
        node_splitting_graph(ConflictGraph(1, frozenset()), 0)


def test_merge_of_proper_split_coloring_is_disjoint_on_edges():
    g = build_conflict_graph(five_pair_vector_topology())
    b = 2
    split = node_splitting_graph(g, b)
    adjacency = split.undirected_adjacency
    # exhaustive search for a proper 5-coloring of the split graph, first hit
    colors = [0] * split.num_nodes

    def fill(v):
        if v == split.num_nodes:
            return True
        for c in range(1, 6):
            if all(colors[w] != c for w in adjacency[v]):
                colors[v] = c
                if fill(v + 1):
                    return True
        colors[v] = 0
        return False

    assert fill(0)
    merged = merge_split_coloring(g, b, colors)
    assert all(len(merged[v]) == b for v in range(g.num_nodes))
    assert all(not (merged[u] & merged[v]) for u, v in g.edges)


def test_merge_rejects_shared_copy_colors():
    g = ConflictGraph(1, frozenset())
    with pytest.raises(ValueError):
        merge_split_coloring(g, 2, [1, 1])


def test_json_codecs_are_canonical():
    topo = five_pair_vector_topology()
    text = topology_to_json(topo)
    assert topology_from_json(text) == topo
    assert topology_to_json(topology_from_json(text)) == text

    g = build_conflict_graph(topo)
    restored = graph_from_json(graph_to_json(g))
    assert restored.edges == g.edges
    assert restored.num_nodes == g.num_nodes


def test_induced_subgraph_relabels():
    g = build_conflict_graph(four_pair_subspace_topology())
    sub, keep = g.induced_subgraph([1, 2, 3])
    assert keep == (1, 2, 3)
    assert sub.edges == frozenset({(0, 1), (0, 2), (1, 2)})


def test_undirected_adjacency_is_symmetric():
    g = build_conflict_graph(five_pair_alignment_topology())
    for u, v in itertools.product(range(g.num_nodes), repeat=2):
        assert (v in g.undirected_adjacency[u]) == (u in g.undirected_adjacency[v])


@pytest.mark.parametrize("b", [1, 2, 3])
@pytest.mark.parametrize("seed", range(8))
def test_split_local_coloring_merges_to_fractional_local_coloring(seed, b):
    rng = np.random.default_rng(seed)
    n = 3 + seed % 4
    edges = frozenset((u, v) for u in range(n) for v in range(n) if u != v and rng.random() < 0.3)
    g = ConflictGraph(n, edges)
    split = node_splitting_graph(g, b)
    coloring = greedy_sli(split.undirected_adjacency)
    r = max(local_color_counts(split.in_neighbors, coloring.colors))

    merged = merge_split_coloring(g, b, list(coloring.colors))
    assert check_fractional_local_coloring(g, merged, coloring.num_colors, r, b)
    if r > b:
        assert not check_fractional_local_coloring(g, merged, coloring.num_colors, r - 1, b)
