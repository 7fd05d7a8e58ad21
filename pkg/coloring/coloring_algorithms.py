"""
coloring_algorithms.py

Classical coloring baselines and the exact chromatic labeler.

- greedy_sli: smallest-last ordering, lowest free color, two-color Kempe
  interchange before a new color is opened.
- tabucol: tabu local search for a fixed number of colors k.
- exact_chromatic: DSATUR branch and bound with a clique lower bound and
  the SLI coloring as the initial upper bound.

All functions take an undirected graph as an adjacency sequence
(adjacency[v] is the set of neighbors of v) and use colors 1..K.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

from collections.abc import Sequence, Set
from dataclasses import dataclass

# import external modules
import numpy as np

# import from local modules
from utils.utils_logger import logger

Adjacency = Sequence[Set[int]]

#####################################
# Coloring Type
#####################################


@dataclass(frozen=True)
class Coloring:
    """colors[v] in 1..num_colors for every node v."""

    colors: tuple[int, ...]
    num_colors: int

    def __post_init__(self) -> None:
        if any(c < 1 or c > self.num_colors for c in self.colors):
            raise ValueError(f"colors must lie in 1..{self.num_colors}")

    @classmethod
    def from_sequence(cls, colors: Sequence[int]) -> Coloring:
        colors = tuple(int(c) for c in colors)
        return cls(colors, max(colors, default=0))

    def as_dict(self) -> dict[int, int]:
        return dict(enumerate(self.colors))


def is_proper(adjacency: Adjacency, colors: Sequence[int]) -> bool:
    return all(colors[u] != colors[v] for u in range(len(adjacency)) for v in adjacency[u])


#####################################
# Smallest-Last Greedy with Interchange
#####################################


def smallest_last_order(adjacency: Adjacency) -> list[int]:
    """Repeatedly remove a minimum-degree vertex (lowest index on ties); return the reversed removal order."""
    n = len(adjacency)
    degree = [len(adjacency[v]) for v in range(n)]
    removed = [False] * n
    removal = []
    for _ in range(n):
        v = min((u for u in range(n) if not removed[u]), key=lambda u: (degree[u], u))
        removed[v] = True
        removal.append(v)
        for w in adjacency[v]:
            if not removed[w]:
                degree[w] -= 1
    return removal[::-1]


def _kempe_component(adjacency: Adjacency, colors: list[int], seeds: Set[int], a: int, b: int) -> set[int]:
    """Nodes reachable from seeds through nodes colored a or b."""
    component = set(seeds)
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for w in adjacency[u]:
            if w not in component and colors[w] in (a, b):
                component.add(w)
                stack.append(w)
    return component


def _try_interchange(adjacency: Adjacency, colors: list[int], v: int, k: int) -> int | None:
    """
    Free one of the colors 1..k at v by swapping a two-color Kempe chain.
    Returns the freed color, or None when no single swap works.
    """
    neighbor_colors = {colors[w] for w in adjacency[v] if colors[w]}
    for a in range(1, k + 1):
        seeds = {w for w in adjacency[v] if colors[w] == a}
        for b in range(1, k + 1):
            if b == a or b not in neighbor_colors:
                continue
            component = _kempe_component(adjacency, colors, seeds, a, b)
            if any(colors[w] == b for w in adjacency[v] if w in component):
                continue
            for w in component:
                colors[w] = b if colors[w] == a else a
            return a
    return None


def greedy_sli(adjacency: Adjacency) -> Coloring:
    """Smallest-last sequential coloring with interchange."""
    n = len(adjacency)
    colors = [0] * n
    k = 0
    for v in smallest_last_order(adjacency):
        used = {colors[w] for w in adjacency[v]}
        free = next((c for c in range(1, k + 1) if c not in used), None)
        if free is None and k >= 2:
            free = _try_interchange(adjacency, colors, v, k)
        if free is None:
            k += 1
            free = k
        colors[v] = free
    logger.debug(f"SLI colored {n} nodes with {k} colors.")
    return Coloring(tuple(colors), k)


#####################################
# TabuCol
#####################################


def tabucol(
    adjacency: Adjacency,
    k: int,
    max_iters: int = 1000,
    tenure: int = 7,
    seed: int = 0,
) -> Coloring | None:
    """
    Tabu search for a conflict-free k-coloring. A move recolors one endpoint of
    a conflicting edge; the (vertex, old color) pair stays tabu for `tenure`
    iterations unless the move reaches a new best objective. Returns None when
    max_iters pass without a zero-conflict state.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(adjacency)
    if n == 0:
        return Coloring((), k)
    rng = np.random.default_rng(seed)
    colors = [int(c) for c in rng.integers(1, k + 1, size=n)]

    # gamma[v][c]: neighbors of v currently colored c
    gamma = [[0] * (k + 1) for _ in range(n)]
    for v in range(n):
        for w in adjacency[v]:
            gamma[v][colors[w]] += 1
    conflicts = sum(gamma[v][colors[v]] for v in range(n)) // 2
    best = conflicts
    tabu_until: dict[tuple[int, int], int] = {}

    for it in range(max_iters):
        if conflicts == 0:
            break
        best_delta = None
        candidates: list[tuple[int, int]] = []
        for v in range(n):
            own = gamma[v][colors[v]]
            if own == 0:
                continue
            for c in range(1, k + 1):
                if c == colors[v]:
                    continue
                delta = gamma[v][c] - own
                is_tabu = tabu_until.get((v, c), -1) > it
                if is_tabu and conflicts + delta >= best:
                    continue
                if best_delta is None or delta < best_delta:
                    best_delta = delta
                    candidates = [(v, c)]
                elif delta == best_delta:
                    candidates.append((v, c))

        if not candidates:
            conflicted = [v for v in range(n) if gamma[v][colors[v]] > 0]
            v = conflicted[int(rng.integers(len(conflicted)))]
            c = int(rng.integers(1, k + 1))
            if c == colors[v]:
                continue
            best_delta = gamma[v][c] - gamma[v][colors[v]]
        else:
            v, c = candidates[int(rng.integers(len(candidates)))]

        old = colors[v]
        colors[v] = c
        for w in adjacency[v]:
            gamma[w][old] -= 1
            gamma[w][c] += 1
        conflicts += best_delta
        tabu_until[(v, old)] = it + tenure
        best = min(best, conflicts)

    if conflicts != 0:
        logger.debug(f"TabuCol: no {k}-coloring after {max_iters} iterations (best {best} conflicts).")
        return None
    return Coloring(tuple(colors), k)


#####################################
# Exact Chromatic Number
#####################################


@dataclass(frozen=True)
class ChromaticResult:
    """chi and witness when proven; otherwise chi is None and [lower, upper] brackets it."""

    chi: int | None
    witness: Coloring
    lower: int
    upper: int
    exhausted: bool
    expansions: int


def greedy_clique(adjacency: Adjacency) -> list[int]:
    """A maximal clique grown from every start vertex; the largest is kept."""
    n = len(adjacency)
    best: list[int] = []
    order = sorted(range(n), key=lambda v: (-len(adjacency[v]), v))
    for start in order:
        clique = [start]
        candidates = set(adjacency[start])
        while candidates:
            v = min(candidates, key=lambda u: (-len(adjacency[u] & candidates), u))
            clique.append(v)
            candidates &= adjacency[v]
        if len(clique) > len(best):
            best = clique
    return best


def exact_chromatic(adjacency: Adjacency, budget: int = 2_000_000) -> ChromaticResult:
    """
    DSATUR branch and bound. Vertices are picked by saturation, then uncolored
    degree, then lowest index. `budget` caps the number of node expansions;
    when it runs out the result reports [lower, upper] with exhausted=True.
    """
    n = len(adjacency)
    if n == 0:
        return ChromaticResult(0, Coloring((), 0), 0, 0, False, 0)

    upper_coloring = greedy_sli(adjacency)
    clique = greedy_clique(adjacency)
    lower = max(1, len(clique))
    state = {"best": upper_coloring.num_colors, "witness": list(upper_coloring.colors), "expansions": 0}
    if lower == state["best"]:
        return ChromaticResult(lower, upper_coloring, lower, lower, False, 0)

    colors = [0] * n
    # neighbor_counts[v][c]: colored neighbors of v with color c
    neighbor_counts = [dict() for _ in range(n)]

    # seed the clique with distinct colors; it fixes the symmetry of the first colors
    for c, v in enumerate(clique, start=1):
        colors[v] = c
        for w in adjacency[v]:
            neighbor_counts[w][c] = neighbor_counts[w].get(c, 0) + 1

    def pick_vertex() -> int:
        best_v, best_key = -1, None
        for v in range(n):
            if colors[v]:
                continue
            key = (len(neighbor_counts[v]), sum(1 for w in adjacency[v] if not colors[w]), -v)
            if best_key is None or key > best_key:
                best_v, best_key = v, key
        return best_v

    def assign(v: int, c: int) -> None:
        colors[v] = c
        for w in adjacency[v]:
            neighbor_counts[w][c] = neighbor_counts[w].get(c, 0) + 1

    def unassign(v: int) -> None:
        c = colors[v]
        colors[v] = 0
        for w in adjacency[v]:
            neighbor_counts[w][c] -= 1
            if neighbor_counts[w][c] == 0:
                del neighbor_counts[w][c]

    def search(colored: int, used: int) -> bool:
        """Returns False when the budget ran out."""
        if colored == n:
            if used < state["best"]:
                state["best"] = used
                state["witness"] = list(colors)
                logger.debug(f"DSATUR improved upper bound to {used}.")
            return True
        state["expansions"] += 1
        if state["expansions"] > budget:
            return False
        v = pick_vertex()
        for c in range(1, min(used + 1, state["best"] - 1) + 1):
            if c in neighbor_counts[v]:
                continue
            assign(v, c)
            ok = search(colored + 1, max(used, c))
            unassign(v)
            if not ok:
                return False
            if state["best"] == lower:
                return True
        return True

    finished = search(len(clique), len(clique))
    witness = Coloring.from_sequence(state["witness"])
    if not finished:
        logger.warning(f"Exact coloring budget {budget} exhausted; chi in [{lower}, {state['best']}].")
        return ChromaticResult(None, witness, lower, state["best"], True, state["expansions"])
    return ChromaticResult(state["best"], witness, state["best"], state["best"], False, state["expansions"])


#####################################
# Local Color Counts
#####################################


def local_color_counts(in_neighbors: Sequence[Set[int]], colors: Sequence[int]) -> list[int]:
    """Distinct assigned (nonzero) colors in each closed in-neighborhood."""
    counts = []
    for i in range(len(in_neighbors)):
        seen = {colors[j] for j in in_neighbors[i] if colors[j]}
        if colors[i]:
            seen.add(colors[i])
        counts.append(len(seen))
    return counts
