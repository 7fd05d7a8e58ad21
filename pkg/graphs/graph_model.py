"""
graph_model.py

Core graph representations for topological interference management.

- TopologyInstance: a partially connected bipartite network (links) with a
  multiple-unicast demand matching.
- ConflictGraph: the directed message conflict graph. One node per demanded
  message; an edge a -> b means the source of a reaches the destination of b.
- node splitting (b copies per node) and the merge of a split coloring back
  into a b-fold coloring of the original graph.

Graph JSON:
{"num_nodes": n, "directed": true, "edges": [[u, v], ...]}

Topology JSON:
{"num_sources": M, "num_destinations": N, "links": [[s, d], ...], "demands": [[s, d], ...]}

Both are written with edges/links sorted so output is byte-stable.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

# import from local modules
from utils.utils_logger import logger

Edge = tuple[int, int]

#####################################
# Topology
#####################################


@dataclass(frozen=True)
class TopologyInstance:
    """Bipartite network: links are (source, destination) pairs with t_ji = 1."""

    num_sources: int
    num_destinations: int
    links: frozenset[Edge]
    demands: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", frozenset((int(s), int(d)) for s, d in self.links))
        object.__setattr__(self, "demands", tuple(sorted((int(s), int(d)) for s, d in self.demands)))
        if self.num_sources < 0 or self.num_destinations < 0:
            raise ValueError("num_sources and num_destinations must be non-negative")
        for s, d in self.links:
            if not (0 <= s < self.num_sources and 0 <= d < self.num_destinations):
                raise ValueError(f"link {(s, d)} out of range for ({self.num_sources}, {self.num_destinations})")
        sources = [s for s, _ in self.demands]
        destinations = [d for _, d in self.demands]
        if len(set(sources)) != len(sources) or len(set(destinations)) != len(destinations):
            raise ValueError("demands must form a matching (multiple unicast)")
        missing = [dm for dm in self.demands if dm not in self.links]
        if missing:
            raise ValueError(f"demands {missing} are not links")

    @property
    def interference_links(self) -> frozenset[Edge]:
        """Links that do not carry a demanded message."""
        return self.links.difference(self.demands)


#####################################
# Conflict Graph
#####################################


@dataclass(frozen=True)
class ConflictGraph:
    """Directed graph over demanded messages. Immutable once built."""

    num_nodes: int
    edges: frozenset[Edge]
    node_labels: tuple[Edge, ...] | None = None
    empty_warning: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset((int(u), int(v)) for u, v in self.edges))
        if self.num_nodes < 0:
            raise ValueError("num_nodes must be non-negative")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"edge {(u, v)} out of range for {self.num_nodes} nodes")
        if self.node_labels is not None and len(self.node_labels) != self.num_nodes:
            raise ValueError("node_labels must have one entry per node")

    @cached_property
    def in_neighbors(self) -> tuple[frozenset[int], ...]:
        ins: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            ins[v].add(u)
        return tuple(frozenset(s) for s in ins)

    @cached_property
    def out_neighbors(self) -> tuple[frozenset[int], ...]:
        outs: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            outs[u].add(v)
        return tuple(frozenset(s) for s in outs)

    @cached_property
    def undirected_adjacency(self) -> tuple[frozenset[int], ...]:
        """Underlying undirected graph; direction is dropped, both ends see each other."""
        return tuple(self.in_neighbors[i] | self.out_neighbors[i] for i in range(self.num_nodes))

    @cached_property
    def undirected_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted({(min(u, v), max(u, v)) for u, v in self.edges}))

    def in_degree(self, i: int) -> int:
        return len(self.in_neighbors[i])

    def induced_subgraph(self, nodes: Iterable[int]) -> tuple[ConflictGraph, tuple[int, ...]]:
        """Subgraph on `nodes` relabeled 0..k-1; also returns the original index of each new node."""
        keep = tuple(sorted(set(nodes)))
        index = {v: k for k, v in enumerate(keep)}
        edges = {(index[u], index[v]) for u, v in self.edges if u in index and v in index}
        return ConflictGraph(num_nodes=len(keep), edges=frozenset(edges)), keep


@dataclass(frozen=True)
class Neighborhood:
    """In-neighborhood of one node: open N+(i) and closed N_c+(i) = N+(i) | {i}."""

    node: int
    open_in: frozenset[int]
    closed_in: frozenset[int]


#####################################
# Operations
#####################################


def build_conflict_graph(topo: TopologyInstance) -> ConflictGraph:
    """
    One node per demand (in sorted demand order). Edge a -> b, a != b, exactly
    when the source of a has a link to the destination of b.
    """
    demands = topo.demands
    if not demands:
        logger.warning("Topology has no demanded messages; conflict graph is empty.")
        return ConflictGraph(num_nodes=0, edges=frozenset(), node_labels=(), empty_warning=True)

    edges: set[Edge] = set()
    for a, (src_a, _) in enumerate(demands):
        for b, (_, dst_b) in enumerate(demands):
            if a != b and (src_a, dst_b) in topo.links:
                edges.add((a, b))
    logger.debug(f"Conflict graph: {len(demands)} nodes, {len(edges)} edges.")
    return ConflictGraph(num_nodes=len(demands), edges=frozenset(edges), node_labels=demands)


def closed_in_neighborhood(g: ConflictGraph, i: int) -> Neighborhood:
    """Return N+(i) and N_c+(i) for node i."""
    if not 0 <= i < g.num_nodes:
        raise ValueError(f"node {i} out of range for {g.num_nodes} nodes")
    open_in = g.in_neighbors[i]
    return Neighborhood(node=i, open_in=open_in, closed_in=open_in | {i})


def node_splitting_graph(g: ConflictGraph, b: int) -> ConflictGraph:
    """
    b-order node splitting graph. Copies of node v occupy indices v*b .. v*b+b-1;
    each original edge (u, v) yields all b*b edges (u_i, v_j) and the copies of
    a node form a directed clique.
    """
    if b < 1:
        raise ValueError(f"split order b must be >= 1, got {b}")
    edges: set[Edge] = set()
    for u, v in g.edges:
        for i in range(b):
            for j in range(b):
                edges.add((u * b + i, v * b + j))
    for v in range(g.num_nodes):
        for i in range(b):
            for j in range(b):
                if i != j:
                    edges.add((v * b + i, v * b + j))
    return ConflictGraph(num_nodes=g.num_nodes * b, edges=frozenset(edges))


def merge_split_coloring(
    g: ConflictGraph, b: int, split_coloring: Mapping[int, int] | list[int] | tuple[int, ...]
) -> dict[int, frozenset[int]]:
    """Give each original node the set of colors of its b split copies."""
    if b < 1:
        raise ValueError(f"split order b must be >= 1, got {b}")
    lookup = dict(split_coloring) if isinstance(split_coloring, Mapping) else dict(enumerate(split_coloring))
    merged: dict[int, frozenset[int]] = {}
    for v in range(g.num_nodes):
        colors = [lookup[v * b + i] for i in range(b)]
        if len(set(colors)) != b:
            logger.error(f"Split copies of node {v} share a color: {colors}")
            raise ValueError(f"split copies of node {v} share a color; not a valid split coloring")
        merged[v] = frozenset(colors)
    return merged


#####################################
# JSON Codecs
#####################################


def graph_to_json(g: ConflictGraph) -> str:
    edges = [list(e) for e in sorted(g.edges)]
    return json.dumps({"num_nodes": g.num_nodes, "directed": True, "edges": edges})


def graph_to_dict(g: ConflictGraph) -> dict:
    return json.loads(graph_to_json(g))


def graph_from_dict(data: Mapping) -> ConflictGraph:
    if not data.get("directed", True):
        raise ValueError("only directed conflict graphs are supported")
    return ConflictGraph(num_nodes=int(data["num_nodes"]), edges=frozenset(tuple(e) for e in data["edges"]))


def graph_from_json(text: str) -> ConflictGraph:
    return graph_from_dict(json.loads(text))


def topology_to_json(topo: TopologyInstance) -> str:
    return json.dumps(
        {
            "num_sources": topo.num_sources,
            "num_destinations": topo.num_destinations,
            "links": [list(e) for e in sorted(topo.links)],
            "demands": [list(e) for e in topo.demands],
        }
    )


def topology_from_json(text: str) -> TopologyInstance:
    data = json.loads(text)
    return TopologyInstance(
        num_sources=int(data["num_sources"]),
        num_destinations=int(data["num_destinations"]),
        links=frozenset(tuple(e) for e in data["links"]),
        demands=tuple(tuple(e) for e in data["demands"]),
    )


#####################################
# Worked Example Instances
#####################################


def _unicast_topology(n: int, interference: Iterable[Edge]) -> TopologyInstance:
    """n pairs S_i -> D_i plus the given (source, destination) interference links."""
    demands = tuple((i, i) for i in range(n))
    return TopologyInstance(n, n, frozenset(demands) | frozenset(interference), demands)


def five_pair_alignment_topology() -> TopologyInstance:
    """
    One-to-one scalar alignment example. D_4 hears S_1 and S_3, so W44 has
    in-edges from W11 and W33. Assigning v1, v2, v1, v1+v2, v2 with x = 2 decodes.
    """
    # 0-based: S_1 -> D_4, S_3 -> D_4, S_4 -> D_5, S_2 -> D_3, S_5 -> D_1
    return _unicast_topology(5, [(0, 3), (2, 3), (3, 4), (1, 2), (4, 0)])


def five_pair_vector_topology() -> TopologyInstance:
    """
    One-to-one vector alignment example. W55 has in-edges from W11 and W44,
    W22 from W11 and W33, and W33 -> W44 closes an undirected 5-cycle.
    OSIA reaches 1/3 here; a 5:2 fractional local coloring reaches 2/5.
    """
    return _unicast_topology(5, [(0, 4), (3, 4), (0, 1), (2, 1), (2, 3)])


def four_pair_subspace_topology() -> TopologyInstance:
    """
    Subspace alignment example: W11 -> W22 -> W33 -> W11 is a directed cycle
    and all three interfere with W44. Best one-to-one DoF is 1/4, subspace 1/3.
    """
    return _unicast_topology(4, [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)])
