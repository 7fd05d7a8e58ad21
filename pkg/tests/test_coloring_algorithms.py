import itertools

import networkx as nx
import pytest

from coloring.coloring_algorithms import (
    Coloring,
    exact_chromatic,
    greedy_clique,
    greedy_sli,
    is_proper,
    local_color_counts,
    smallest_last_order,
    tabucol,
)
from graphs.graph_model import ConflictGraph, build_conflict_graph, five_pair_vector_topology
from tests.oracles import brute_force_chromatic


def adjacency_of(graph: nx.Graph) -> list[frozenset[int]]:
    return [frozenset(graph.neighbors(v)) for v in range(graph.number_of_nodes())]


def small_graphs():
    yield "empty3", nx.empty_graph(3)
    yield "path5", nx.path_graph(5)
    yield "c5", nx.cycle_graph(5)
    yield "c6", nx.cycle_graph(6)
    yield "k4", nx.complete_graph(4)
    yield "wheel6", nx.wheel_graph(6)
    yield "petersen", nx.petersen_graph()
    for seed in range(4):
        yield f"gnp{seed}", nx.gnp_random_graph(7, 0.45, seed=seed)


SMALL = list(small_graphs())


def _edges(graph):
    return [(u, v) for u, v in graph.edges()]


@pytest.mark.parametrize("name,graph", SMALL, ids=[n for n, _ in SMALL])
def test_sli_is_proper(name, graph):
    adjacency = adjacency_of(graph)
    c = greedy_sli(adjacency)
    assert is_proper(adjacency, c.colors)
    assert set(c.colors) <= set(range(1, c.num_colors + 1))


@pytest.mark.parametrize("name,graph", SMALL, ids=[n for n, _ in SMALL])
def test_exact_matches_brute_force(name, graph):
    adjacency = adjacency_of(graph)
    result = exact_chromatic(adjacency, budget=200_000)
    assert not result.exhausted
    n = graph.number_of_nodes()
    if n <= 7:
        assert result.chi == brute_force_chromatic(n, _edges(graph))
    assert is_proper(adjacency, result.witness.colors)
    assert max(result.witness.colors) == result.chi
    assert result.lower == result.upper == result.chi


def test_exact_on_petersen_is_three():
    assert exact_chromatic(adjacency_of(nx.petersen_graph())).chi == 3


def test_exact_on_empty_graph():
    result = exact_chromatic([])
    assert result.chi == 0
    assert not result.exhausted


def test_exact_budget_exhaustion_reports_bounds():
    adjacency = adjacency_of(nx.cycle_graph(7))
    result = exact_chromatic(adjacency, budget=0)
    assert result.exhausted
    assert result.chi is None
    assert result.lower <= 3 <= result.upper
    assert is_proper(adjacency, result.witness.colors)


def test_greedy_clique_is_a_clique():
    graph = nx.gnp_random_graph(12, 0.5, seed=5)
    adjacency = adjacency_of(graph)
    clique = greedy_clique(adjacency)
    assert all(v in adjacency[u] for u, v in itertools.combinations(clique, 2))


def test_smallest_last_order_is_a_permutation():
    adjacency = adjacency_of(nx.petersen_graph())
    assert sorted(smallest_last_order(adjacency)) == list(range(10))


def test_sli_interchange_colors_crown_with_two_colors():
    # crown graph: bipartite, but first-fit in a bad order opens extra colors
    graph = nx.complete_bipartite_graph(4, 4)
    graph.remove_edges_from([(i, i + 4) for i in range(4)])
    assert greedy_sli(adjacency_of(graph)).num_colors == 2


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_tabucol_finds_chi_coloring(seed):
    graph = nx.gnp_random_graph(20, 0.3, seed=seed)
    adjacency = adjacency_of(graph)
    chi = exact_chromatic(adjacency).chi
    coloring = tabucol(adjacency, chi + 1, max_iters=5000, seed=seed)
    assert coloring is not None
    assert is_proper(adjacency, coloring.colors)
    assert coloring.num_colors == chi + 1


def test_tabucol_returns_none_below_chi():
    adjacency = adjacency_of(nx.complete_graph(5))
    assert tabucol(adjacency, 4, max_iters=200) is None


def test_tabucol_rejects_zero_colors():
    with pytest.raises(ValueError):
        tabucol(adjacency_of(nx.path_graph(2)), 0)


def test_coloring_validates_range():
    with pytest.raises(ValueError):
        Coloring((1, 3), 2)
    assert Coloring.from_sequence([2, 1, 2]).num_colors == 2


def test_local_color_counts_on_vector_example():
    g = build_conflict_graph(five_pair_vector_topology())
    counts = local_color_counts(g.in_neighbors, [1, 2, 4, 3, 2])
    assert counts == [1, 3, 1, 2, 3]


def test_local_color_counts_ignore_deferred():
    g = ConflictGraph(3, frozenset({(0, 2), (1, 2)}))
    assert local_color_counts(g.in_neighbors, [1, 0, 2]) == [1, 0, 2]


@pytest.mark.parametrize("batch", range(10))
def test_sli_and_exact_against_brute_force_on_random_graphs(batch):
    for seed in range(20 * batch, 20 * batch + 20):
        n = 3 + seed % 5
        graph = nx.gnp_random_graph(n, 0.2 + 0.1 * (seed % 4), seed=seed)
        adjacency = adjacency_of(graph)
        chi = brute_force_chromatic(n, _edges(graph))
        sli = greedy_sli(adjacency)
        assert is_proper(adjacency, sli.colors)
        assert sli.num_colors >= chi
        result = exact_chromatic(adjacency, budget=200_000)
        assert result.chi == chi
        assert is_proper(adjacency, result.witness.colors)
