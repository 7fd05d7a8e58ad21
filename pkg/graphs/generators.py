"""
generators.py

Random instance generation for every dataset family:

- bipartite topologies (ER, PA, HH) with a random demand matching,
- Wireless Net topologies from transceiver placement and path loss,
- GEO and BA graphs generated directly as conflict graphs.

Also holds chromatic-number labeling and the JSONL dataset manifest:
{"id": ..., "chi": ..., "family": ..., "seed": ..., "graph": {...}}

Identical (family, params, seed) always yields an identical instance.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import json
import math
import pathlib
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

# import external modules
import networkx as nx
import numpy as np

# import from local modules
from coloring.coloring_algorithms import exact_chromatic
from graphs.graph_model import (
    ConflictGraph,
    TopologyInstance,
    build_conflict_graph,
    graph_from_dict,
    graph_to_dict,
)
from utils.utils_logger import logger

BIPARTITE_FAMILIES = ("ER", "PA", "HH", "WirelessNet")
DIRECT_FAMILIES = ("GEO", "BA")
FAMILIES = BIPARTITE_FAMILIES + DIRECT_FAMILIES

# family -> (required params, optional params)
FAMILY_PARAMS: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    "ER": (frozenset({"p"}), frozenset()),
    "PA": (frozenset({"p", "max_degree"}), frozenset()),
    "HH": (frozenset({"max_degree"}), frozenset()),
    "GEO": (frozenset({"radius"}), frozenset()),
    "BA": (frozenset({"m"}), frozenset()),
    "WirelessNet": (
        frozenset({"threshold_value"}),
        frozenset({"threshold_mode", "area_side", "pathloss_exponent", "breakpoint_distance"}),
    ),
}

MAX_REDRAWS = 200

#####################################
# Specs
#####################################


@dataclass(frozen=True)
class WirelessConfig:
    """Placement and thresholding knobs for Wireless Net instances (meters)."""

    area_side: float = 1000.0
    link_distance_range: tuple[float, float] = (2.0, 65.0)
    near_exponent: float = 2.0
    pathloss_exponent: float = 4.0
    breakpoint_distance: float = 100.0
    threshold_mode: str = "topological_density"
    threshold_value: float = 0.4

    def __post_init__(self) -> None:
        lo, hi = self.link_distance_range
        if self.area_side <= 0 or lo <= 0 or hi < lo or self.breakpoint_distance <= 0:
            raise ValueError("wireless ranges must be positive")
        if self.pathloss_exponent <= 0 or self.near_exponent <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.threshold_mode not in ("topological_density", "channel_percentile"):
            raise ValueError(f"unknown threshold_mode {self.threshold_mode!r}")
        if not 0.0 < self.threshold_value <= 1.0:
            raise ValueError("threshold_value must lie in (0, 1]")


@dataclass(frozen=True)
class GenSpec:
    """One dataset family draw. size is (M, N) for bipartite families, (n,) for GEO/BA."""

    family: str
    size: tuple[int, ...]
    family_params: Mapping[str, float] = field(default_factory=dict)
    demand_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        required, optional = FAMILY_PARAMS[self.family]
        given = set(self.family_params)
        if not required <= given or not given <= required | optional:
            raise ValueError(
                f"family {self.family} expects params {sorted(required)} "
                f"(optional {sorted(optional)}), got {sorted(given)}"
            )
        if not 0.0 <= self.demand_fraction <= 1.0:
            raise ValueError("demand_fraction q must lie in [0, 1]")
        expected = 1 if self.family in DIRECT_FAMILIES else 2
        if len(self.size) != expected or any(n < 0 for n in self.size):
            raise ValueError(f"family {self.family} expects size of length {expected}, got {self.size}")
        if self.family == "WirelessNet" and self.size[0] != self.size[1]:
            raise ValueError("WirelessNet sizes are transceiver pairs: use (n, n)")
        p = self.family_params.get("p")
        if p is not None and not 0.0 <= p <= 1.0:
            raise ValueError("edge probability p must lie in [0, 1]")


#####################################
# Demand Selection
#####################################


def select_demands(links: Iterable[tuple[int, int]], q: float, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    """
    Draw ceil(q * |links|) candidate links without replacement and keep a
    random maximal matching among them (greedy in the drawn order).
    """
    ordered = sorted(links)
    if not ordered or q <= 0:
        return ()
    n_candidates = math.ceil(q * len(ordered))
    picks = rng.permutation(len(ordered))[:n_candidates]
    used_s: set[int] = set()
    used_d: set[int] = set()
    chosen = []
    for k in picks:
        s, d = ordered[int(k)]
        if s not in used_s and d not in used_d:
            used_s.add(s)
            used_d.add(d)
            chosen.append((s, d))
    assert len({s for s, _ in chosen}) == len(chosen) == len({d for _, d in chosen})
    return tuple(sorted(chosen))


#####################################
# Bipartite Families
#####################################


def _links_from_bipartite(graph: nx.Graph, num_sources: int, num_destinations: int) -> frozenset[tuple[int, int]]:
    """networkx bipartite generators number top nodes first; bottom nodes beyond N fold modulo N."""
    links = set()
    for a, b in graph.edges():
        s, d = (a, b) if a < num_sources else (b, a)
        links.add((int(s), int(d - num_sources) % max(num_destinations, 1)))
    return frozenset(links)


def _degree_sequence(rng: np.random.Generator, n: int, max_degree: int) -> list[int]:
    return [int(x) for x in rng.integers(1, max_degree + 1, size=n)]


def _generate_er(spec: GenSpec, rng: np.random.Generator) -> frozenset[tuple[int, int]]:
    m, n = spec.size
    graph = nx.bipartite.random_graph(m, n, float(spec.family_params["p"]), seed=int(rng.integers(2**31)))
    return _links_from_bipartite(graph, m, n)


def _generate_pa(spec: GenSpec, rng: np.random.Generator) -> frozenset[tuple[int, int]]:
    m, n = spec.size
    max_degree = int(spec.family_params["max_degree"])
    aseq = _degree_sequence(rng, m, max_degree)
    graph = nx.bipartite.preferential_attachment_graph(
        aseq, float(spec.family_params["p"]), create_using=nx.Graph(), seed=int(rng.integers(2**31))
    )
    return _links_from_bipartite(graph, m, n)


def _generate_hh(spec: GenSpec, rng: np.random.Generator) -> frozenset[tuple[int, int]]:
    m, n = spec.size
    max_degree = int(spec.family_params["max_degree"])
    cap = min(max_degree, m)
    for attempt in range(MAX_REDRAWS):
        aseq = [min(d, n) for d in _degree_sequence(rng, m, max_degree)]
        total = sum(aseq)
        if total > n * cap:
            logger.debug(f"HH redraw {attempt}: {total} stubs exceed destination capacity")
            continue
        # spread the same number of stubs over the destinations, one at a time
        bseq = [0] * n
        for _ in range(total):
            open_slots = [j for j in range(n) if bseq[j] < cap]
            bseq[open_slots[int(rng.integers(len(open_slots)))]] += 1
        graph = nx.bipartite.havel_hakimi_graph(aseq, bseq, create_using=nx.Graph())
        return _links_from_bipartite(graph, m, n)
    raise ValueError(f"could not draw HH degree sequences for size {spec.size} after {MAX_REDRAWS} tries")


#####################################
# Wireless Net
#####################################


def _path_loss_db(distance: np.ndarray, cfg: WirelessConfig) -> np.ndarray:
    """Two-slope log-distance path loss (dB), continuous at the breakpoint."""
    d = np.maximum(distance, 1.0)
    near = 10.0 * cfg.near_exponent * np.log10(d)
    far = 10.0 * cfg.near_exponent * np.log10(cfg.breakpoint_distance) + 10.0 * cfg.pathloss_exponent * np.log10(
        d / cfg.breakpoint_distance
    )
    return np.where(d <= cfg.breakpoint_distance, near, far)


def generate_wireless(n_pairs: int, cfg: WirelessConfig, seed: int) -> TopologyInstance:
    """
    Place n_pairs transmitter/receiver pairs in the square, every pair demanded.
    Cross links are ranked by interference-to-signal gain (dB, relative to the
    victim receiver's own link) and kept either above the threshold_value
    quantile (channel_percentile) or as the round(d * n * (n - 1)) strongest
    (topological_density).
    """
    rng = np.random.default_rng(seed)
    lo, hi = cfg.link_distance_range
    tx = rng.uniform(0.0, cfg.area_side, size=(n_pairs, 2))
    dist = rng.uniform(lo, hi, size=n_pairs)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_pairs)
    rx = np.clip(tx + np.stack([dist * np.cos(theta), dist * np.sin(theta)], axis=1), 0.0, cfg.area_side)

    # gain_db[j, i] is the gain from transmitter i to receiver j
    separation = np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=2)
    gain_db = -_path_loss_db(separation, cfg)
    relative = gain_db - np.diag(gain_db)[:, None]

    cross = [(int(i), int(j)) for j in range(n_pairs) for i in range(n_pairs) if i != j]
    strengths = np.array([relative[j, i] for i, j in cross]) if cross else np.zeros(0)

    if cfg.threshold_mode == "channel_percentile":
        if cross:
            cutoff = float(np.quantile(strengths, cfg.threshold_value))
            kept = [link for link, st in zip(cross, strengths) if st > cutoff]
        else:
            kept = []
    else:
        target = int(round(cfg.threshold_value * len(cross)))
        if target > len(cross):
            raise ValueError(f"density {cfg.threshold_value} infeasible for {n_pairs} pairs")
        order = np.argsort(-strengths, kind="stable")
        kept = [cross[int(k)] for k in order[:target]]

    demands = tuple((i, i) for i in range(n_pairs))
    logger.debug(f"Wireless net: {n_pairs} pairs, {len(kept)} interference links kept.")
    return TopologyInstance(n_pairs, n_pairs, frozenset(demands) | frozenset(kept), demands)


#####################################
# Direct Conflict-Graph Families
#####################################


def _symmetric_conflict_graph(graph: nx.Graph) -> ConflictGraph:
    edges = set()
    for u, v in graph.edges():
        edges.add((int(u), int(v)))
        edges.add((int(v), int(u)))
    return ConflictGraph(num_nodes=graph.number_of_nodes(), edges=frozenset(edges))


#####################################
# Generate
#####################################


def generate(spec: GenSpec) -> TopologyInstance | ConflictGraph:
    """Draw one instance of spec.family. Bipartite families return a topology."""
    rng = np.random.default_rng(spec.seed)
    if spec.family == "GEO":
        (n,) = spec.size
        graph = nx.random_geometric_graph(n, float(spec.family_params["radius"]), seed=int(rng.integers(2**31)))
        return _symmetric_conflict_graph(graph)
    if spec.family == "BA":
        (n,) = spec.size
        graph = nx.barabasi_albert_graph(n, int(spec.family_params["m"]), seed=int(rng.integers(2**31)))
        return _symmetric_conflict_graph(graph)
    if spec.family == "WirelessNet":
        params = dict(spec.family_params)
        cfg = WirelessConfig(**params)
        return generate_wireless(spec.size[0], cfg, spec.seed)

    builders = {"ER": _generate_er, "PA": _generate_pa, "HH": _generate_hh}
    links = builders[spec.family](spec, rng)
    demands = select_demands(links, spec.demand_fraction, rng)
    m, n = spec.size
    return TopologyInstance(m, n, links, demands)


def conflict_graph_of(instance: TopologyInstance | ConflictGraph) -> ConflictGraph:
    if isinstance(instance, ConflictGraph):
        return instance
    return build_conflict_graph(instance)


#####################################
# Labeling
#####################################


@dataclass(frozen=True)
class LabeledInstance:
    """A dataset record. chi is None when the exact labeler ran out of budget."""

    id: str
    family: str
    seed: int
    graph: ConflictGraph
    chi: int | None
    chi_bounds: tuple[int, int] | None = None

    @property
    def labeled(self) -> bool:
        return self.chi is not None


def label_dataset(
    instances: Sequence[tuple[str, str, int, TopologyInstance | ConflictGraph]], budget: int
) -> list[LabeledInstance]:
    """Annotate (id, family, seed, instance) tuples with the chromatic number of the conflict graph."""
    labeled = []
    unlabeled = 0
    for inst_id, family, seed, instance in instances:
        graph = conflict_graph_of(instance)
        result = exact_chromatic(graph.undirected_adjacency, budget=budget)
        if result.exhausted:
            unlabeled += 1
            labeled.append(LabeledInstance(inst_id, family, seed, graph, None, (result.lower, result.upper)))
        else:
            labeled.append(LabeledInstance(inst_id, family, seed, graph, result.chi))
    if unlabeled:
        logger.warning(f"{unlabeled} of {len(instances)} instances exceeded the labeling budget and stay unlabeled.")
    return labeled


def filter_by_chi(records: Iterable[LabeledInstance], chi: int) -> list[LabeledInstance]:
    return [r for r in records if r.chi == chi]


#####################################
# Dataset Manifest (JSONL)
#####################################


def record_to_json(record: LabeledInstance) -> str:
    return json.dumps(
        {
            "id": record.id,
            "chi": record.chi,
            "chi_bounds": list(record.chi_bounds) if record.chi_bounds else None,
            "family": record.family,
            "seed": record.seed,
            "graph": graph_to_dict(record.graph),
        }
    )


def write_dataset(path: pathlib.Path, records: Iterable[LabeledInstance]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w") as f:
        for record in records:
            f.write(record_to_json(record) + "\n")
            count += 1
    logger.info(f"Wrote {count} records to {path}")
    return count


def read_dataset(path: pathlib.Path) -> list[LabeledInstance]:
    records = []
    with path.open("r") as f:
        for line in f:
            if not line.strip():
                continue
            data = json.loads(line)
            records.append(
                LabeledInstance(
                    id=str(data["id"]),
                    family=str(data["family"]),
                    seed=int(data["seed"]),
                    graph=graph_from_dict(data["graph"]),
                    chi=None if data.get("chi") is None else int(data["chi"]),
                    chi_bounds=tuple(data["chi_bounds"]) if data.get("chi_bounds") else None,
                )
            )
    logger.info(f"Read {len(records)} records from {path}")
    return records
