"""
ia_verify.py

Certification of interference-alignment schemes.

Checks:
- check_coloring / check_local_coloring / check_fractional_local_coloring
- neighborhood_ranks and check_matrix_rank_reduction on the conflict graph
- check_decodability on the bipartite topology itself

A Scheme is only marked certified by certify(), after every check that
applies to its mode has passed. dof() refuses uncertified schemes.

Scheme JSON:
{"mode": "OSIA", "K": 4, "r": 3, "b": 1, "x": 3,
 "assignment": {"0": [2], ...}, "vectors": [[1, 0, 0], ...],
 "d_sym": "1/3", "certified": true}

Assignment entries are 0-based indices into "vectors".
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import dataclasses
import json
from collections.abc import Mapping, Sequence, Set
from dataclasses import dataclass
from fractions import Fraction

# import from local modules
from coding.codes_linalg import (
    Column,
    ExactMatrix,
    VectorFamily,
    mds_family,
    project_to_dimension,
    rank_exact,
    rank_of_columns,
)
from coloring.coloring_algorithms import Coloring, local_color_counts
from graphs.graph_model import ConflictGraph, TopologyInstance
from utils.utils_logger import logger

MODES = ("OSIA", "OVIA", "SSIA", "SVIA", "TDMA")


class UncertifiedSchemeError(ValueError):
    """Raised when a DoF is requested for a scheme that did not pass certify()."""


#####################################
# Coloring Checks
#####################################


def check_coloring(g: ConflictGraph, c: Coloring) -> bool:
    """True iff no undirected edge is monochromatic."""
    if len(c.colors) != g.num_nodes:
        raise ValueError(f"coloring covers {len(c.colors)} nodes, graph has {g.num_nodes}")
    return all(c.colors[u] != c.colors[v] for u, v in g.edges)


@dataclass(frozen=True)
class LocalCheck:
    counts: tuple[int, ...]
    ok: bool

    @property
    def max_count(self) -> int:
        return max(self.counts, default=0)


def check_local_coloring(g: ConflictGraph, c: Coloring, K: int, r: int) -> LocalCheck:
    """Counts distinct colors in every closed in-neighborhood; ok iff all counts <= r."""
    if not check_coloring(g, c):
        logger.error("Local coloring check called with an improper base coloring.")
        raise ValueError("base coloring is not proper; local colorability is undefined")
    if c.colors and max(c.colors) > K:
        raise ValueError(f"coloring uses color {max(c.colors)} > K={K}")
    counts = tuple(local_color_counts(g.in_neighbors, c.colors))
    return LocalCheck(counts, all(n <= r for n in counts))


def check_fractional_local_coloring(
    g: ConflictGraph, fc: Mapping[int, Set[int]], K: int, r: int, b: int
) -> bool:
    """Adjacent color sets disjoint and every closed in-neighborhood uses at most r colors."""
    for v in range(g.num_nodes):
        if v not in fc:
            raise ValueError(f"node {v} has no color set")
        colors = fc[v]
        if len(colors) != b:
            raise ValueError(f"node {v} holds {len(colors)} colors, expected b={b}")
        if any(not 1 <= col <= K for col in colors):
            raise ValueError(f"node {v} uses a color outside 1..{K}")

    if any(set(fc[u]) & set(fc[v]) for u, v in g.edges):
        return False
    for i in range(g.num_nodes):
        union = set(fc[i])
        for j in g.in_neighbors[i]:
            union |= fc[j]
        if len(union) > r:
            return False
    return True


#####################################
# Vector Assignments and Ranks
#####################################


@dataclass(frozen=True)
class VectorAssignment:
    """Each node holds exactly b column indices into `family`."""

    family: VectorFamily
    columns: Mapping[int, tuple[int, ...]]
    b: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", {int(k): tuple(v) for k, v in self.columns.items()})
        for node, idx in self.columns.items():
            if len(idx) != self.b:
                raise ValueError(f"node {node} holds {len(idx)} columns, expected b={self.b}")
            if any(not 0 <= j < len(self.family) for j in idx):
                raise ValueError(f"node {node} references a column outside the family")

    def vectors_of(self, nodes: Set[int]) -> list[Column]:
        missing = [v for v in nodes if v not in self.columns]
        if missing:
            raise ValueError(f"nodes {sorted(missing)} are unassigned")
        return [self.family.vectors[j] for v in sorted(nodes) for j in self.columns[v]]

    def matrix(self, node: int) -> ExactMatrix:
        return self.family.matrix(self.columns[node])


def neighborhood_ranks(g: ConflictGraph, va: VectorAssignment, i: int) -> tuple[int, int]:
    """(r_N(i), r_cN(i)): ranks of the stacked columns over N+(i) and N_c+(i)."""
    open_in = g.in_neighbors[i]
    dim = va.family.dim
    r_open = rank_of_columns(va.vectors_of(open_in), dim)
    r_closed = rank_of_columns(va.vectors_of(open_in | {i}), dim)
    return r_open, r_closed


def check_matrix_rank_reduction(g: ConflictGraph, va: VectorAssignment, r: int, b: int) -> bool:
    worst = 0
    for i in range(g.num_nodes):
        r_open, r_closed = neighborhood_ranks(g, va, i)
        if r_closed - r_open != b:
            logger.debug(f"Node {i}: r_cN - r_N = {r_closed - r_open}, expected {b}")
            return False
        worst = max(worst, r_closed)
    return worst <= r


def check_decodability(topo: TopologyInstance, beamformers: Mapping[int, ExactMatrix]) -> bool:
    """
    beamformers[a] is the x-row matrix of demand a (sorted demand order). Every
    destination must see its own columns rise the rank of its interference by b.
    """
    demands = topo.demands
    missing = [a for a in range(len(demands)) if a not in beamformers]
    if missing:
        raise ValueError(f"demands {missing} have no beamforming matrix")
    heights = {m.rows for m in beamformers.values()}
    widths = {m.cols for m in beamformers.values()}
    if len(heights) > 1 or len(widths) > 1:
        raise ValueError(f"beamformers disagree in shape: rows {sorted(heights)}, cols {sorted(widths)}")
    if not demands:
        return True
    x, b = heights.pop(), widths.pop()

    for a, (_, dst) in enumerate(demands):
        interference = ExactMatrix.zeros(x, 0)
        for c, (src, _) in enumerate(demands):
            if c != a and (src, dst) in topo.links:
                interference = interference.hstack(beamformers[c])
        gain = rank_exact(beamformers[a].hstack(interference)) - rank_exact(interference)
        if gain != b:
            logger.debug(f"Demand {a} at destination {dst}: rank gain {gain}, expected {b}")
            return False
    return True


#####################################
# Scheme
#####################################


@dataclass(frozen=True)
class Scheme:
    mode: str
    K: int
    r: int
    b: int
    x: int
    assignment: Mapping[int, tuple[int, ...]]
    vectors: tuple[Column, ...]
    d_sym: Fraction
    certified: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown scheme mode {self.mode!r}")
        object.__setattr__(self, "assignment", {int(k): tuple(int(j) for j in v) for k, v in self.assignment.items()})
        object.__setattr__(self, "vectors", tuple(tuple(int(c) for c in v) for v in self.vectors))
        object.__setattr__(self, "d_sym", Fraction(self.d_sym))

    def vector_assignment(self) -> VectorAssignment:
        family = VectorFamily(dim=self.x, vectors=self.vectors, kind="mds")
        return VectorAssignment(family, self.assignment, self.b)

    def coloring(self) -> Coloring:
        """Per-node color (vector index + 1); only meaningful for b = 1."""
        return Coloring(tuple(self.assignment[v][0] + 1 for v in range(len(self.assignment))), max(self.K, 1))

    def color_sets(self) -> dict[int, frozenset[int]]:
        return {v: frozenset(j + 1 for j in idx) for v, idx in self.assignment.items()}


def expected_dof(mode: str, K: int, r: int, b: int, x: int) -> Fraction:
    if mode == "OSIA":
        return Fraction(1, r)
    if mode == "OVIA":
        return Fraction(b, r)
    if mode in ("SSIA", "SVIA"):
        return Fraction(b, x)
    if mode == "TDMA":
        return Fraction(1, K)
    raise ValueError(f"unknown scheme mode {mode!r}")


def dof(scheme: Scheme) -> Fraction:
    if not scheme.certified:
        raise UncertifiedSchemeError(f"{scheme.mode} scheme is not certified")
    return expected_dof(scheme.mode, scheme.K, scheme.r, scheme.b, scheme.x)


#####################################
# Scheme Builders
#####################################


def _standard_basis(k: int) -> tuple[Column, ...]:
    return tuple(tuple(int(i == j) for i in range(k)) for j in range(k))


def tdma_scheme(g: ConflictGraph, coloring: Coloring) -> Scheme:
    """One orthogonal slot per color: x = K."""
    K = max(coloring.num_colors, 1)
    assignment = {v: (coloring.colors[v] - 1,) for v in range(g.num_nodes)}
    return Scheme("TDMA", K, K, 1, K, assignment, _standard_basis(K), Fraction(1, K))


def osia_scheme(g: ConflictGraph, coloring: Coloring, K: int, r: int, p: int | None = None) -> Scheme:
    """Color c of a (K, r)-local coloring is realized by column c of an r x K MDS generator."""
    family = mds_family(K, r, p)
    assignment = {v: (coloring.colors[v] - 1,) for v in range(g.num_nodes)}
    return Scheme("OSIA", K, r, 1, r, assignment, family.vectors, Fraction(1, r))


def ovia_scheme(
    g: ConflictGraph, fractional: Mapping[int, Set[int]], K: int, r: int, b: int, p: int | None = None
) -> Scheme:
    family = mds_family(K, r, p)
    assignment = {v: tuple(sorted(c - 1 for c in fractional[v])) for v in range(g.num_nodes)}
    return Scheme("OVIA", K, r, b, r, assignment, family.vectors, Fraction(b, r))


def subspace_scheme(
    g: ConflictGraph,
    vectors_per_node: Mapping[int, Sequence[Sequence[int]]],
    b: int,
    r: int,
    mode: str = "SSIA",
    seed: int = 0,
) -> Scheme:
    """
    Build a subspace scheme from explicit per-node columns. The blocklength is
    x = max_i r_cN(i); columns are projected down to x rows when they are longer.
    """
    if mode not in ("SSIA", "SVIA"):
        raise ValueError(f"subspace schemes are SSIA or SVIA, got {mode!r}")
    distinct: list[Column] = []
    index: dict[Column, int] = {}
    assignment: dict[int, tuple[int, ...]] = {}
    for v in range(g.num_nodes):
        cols = [tuple(int(c) for c in col) for col in vectors_per_node[v]]
        if len(cols) != b:
            raise ValueError(f"node {v} holds {len(cols)} columns, expected b={b}")
        for col in cols:
            if col not in index:
                index[col] = len(distinct)
                distinct.append(col)
        assignment[v] = tuple(index[col] for col in cols)

    groups = []
    for i in range(g.num_nodes):
        groups.append([j for u in g.in_neighbors[i] for j in assignment[u]])
        groups.append([j for u in g.in_neighbors[i] | {i} for j in assignment[u]])
    dim = len(distinct[0]) if distinct else 1
    x = max((rank_of_columns([distinct[j] for j in grp], dim) for grp in groups), default=0)
    x = max(x, 1)
    projected = project_to_dimension(distinct, groups, x, seed=seed) if distinct else []
    return Scheme(mode, K=len(distinct), r=r, b=b, x=x, assignment=assignment, vectors=projected, d_sym=Fraction(b, x))


#####################################
# Certification
#####################################


def _structure_errors(g: ConflictGraph, scheme: Scheme) -> list[str]:
    errors = []
    if set(scheme.assignment) != set(range(g.num_nodes)):
        errors.append("assignment does not cover exactly the graph nodes")
    for v, idx in scheme.assignment.items():
        if len(idx) != scheme.b:
            errors.append(f"node {v} holds {len(idx)} vectors, expected {scheme.b}")
        if any(not 0 <= j < len(scheme.vectors) for j in idx):
            errors.append(f"node {v} references a missing vector")
    if any(len(vec) != scheme.x for vec in scheme.vectors):
        errors.append(f"vectors are not all of length x={scheme.x}")
    if scheme.x < 1 or scheme.b < 1:
        errors.append("x and b must be positive")
    return errors


def _mode_errors(g: ConflictGraph, scheme: Scheme) -> list[str]:
    mode, K, r, b = scheme.mode, scheme.K, scheme.r, scheme.b
    if mode in ("TDMA", "OSIA"):
        if b != 1:
            return [f"{mode} requires b = 1"]
        coloring = scheme.coloring()
        if not check_coloring(g, coloring):
            return ["induced coloring is not proper"]
        if max(coloring.colors, default=0) > K:
            return [f"more than K={K} colors"]
        if mode == "OSIA" and not check_local_coloring(g, coloring, K, r).ok:
            return [f"not ({K},{r})-local"]
    elif mode == "OVIA":
        if not check_fractional_local_coloring(g, scheme.color_sets(), K, r, b):
            return [f"not ({K},{r},{b}) fractional local"]
    return []


def certify(g: ConflictGraph, scheme: Scheme, topo: TopologyInstance | None = None) -> Scheme:
    """
    Re-derive every property of `scheme` on `g` (and on `topo` when given).
    Returns a copy with certified=True on success, certified=False otherwise.
    """
    errors = _structure_errors(g, scheme)
    if not errors:
        try:
            errors = _mode_errors(g, scheme)
        except ValueError as e:
            errors = [str(e)]
    if not errors:
        va = scheme.vector_assignment()
        if not check_matrix_rank_reduction(g, va, scheme.x, scheme.b):
            errors.append("rank reduction condition fails")
    if not errors and scheme.d_sym != expected_dof(scheme.mode, scheme.K, scheme.r, scheme.b, scheme.x):
        errors.append(f"declared d_sym {scheme.d_sym} does not match the mode formula")
    if not errors and topo is not None:
        va = scheme.vector_assignment()
        if not check_decodability(topo, {v: va.matrix(v) for v in range(g.num_nodes)}):
            errors.append("some destination cannot decode")

    if errors:
        logger.warning(f"{scheme.mode} scheme not certified: {'; '.join(errors)}")
        return dataclasses.replace(scheme, certified=False)
    return dataclasses.replace(scheme, certified=True)


#####################################
# JSON Codecs
#####################################


def scheme_to_dict(scheme: Scheme) -> dict:
    return {
        "mode": scheme.mode,
        "K": scheme.K,
        "r": scheme.r,
        "b": scheme.b,
        "x": scheme.x,
        "assignment": {str(v): list(idx) for v, idx in sorted(scheme.assignment.items())},
        "vectors": [list(vec) for vec in scheme.vectors],
        "d_sym": f"{scheme.d_sym.numerator}/{scheme.d_sym.denominator}",
        "certified": scheme.certified,
    }


def scheme_to_json(scheme: Scheme) -> str:
    return json.dumps(scheme_to_dict(scheme))


def scheme_from_dict(data: Mapping) -> Scheme:
    return Scheme(
        mode=str(data["mode"]),
        K=int(data["K"]),
        r=int(data["r"]),
        b=int(data["b"]),
        x=int(data["x"]),
        assignment={int(k): tuple(v) for k, v in data["assignment"].items()},
        vectors=tuple(tuple(v) for v in data["vectors"]),
        d_sym=Fraction(data["d_sym"]),
        certified=bool(data.get("certified", False)),
    )


def scheme_from_json(text: str) -> Scheme:
    return scheme_from_dict(json.loads(text))
