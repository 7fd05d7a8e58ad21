"""
lcg_env.py

The learn-to-defer environment over a conflict graph.

State: one symbol per node, 0 = deferred, 1..A = a color (or, in matrix
mode, binary vector k of length r). Each step the agent labels or defers
every deferred node, then clean-up rolls back infeasible labels:

- coloring / local_coloring: clean-up-I resets both endpoints of every
  edge whose endpoints share a nonzero label.
- local_coloring only, while t < ceil(alpha * B): clean-up-II resets the
  whole closed in-neighborhood of any node whose assigned labels show
  more than r distinct colors.
- matrix_rank_reduction: every fully assigned closed in-neighborhood with
  r_cN(i) - r_N(i) != 1 is reset.

Violations are computed on the post-update snapshot and applied together.
Reward per step: R = R_c + beta * R_t with R_c = (assigned' - assigned)/|V|
and R_t = (B - t')/B when the step completes the assignment.

The env is always b = 1; b > 1 is handled by node splitting before the
env is built (solve_fractional, solve_subspace_vector).
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import pathlib
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

# import external modules
import numpy as np

# import from local modules
from coding.codes_linalg import binary_vector, rank_of_columns
from coding.ia_verify import (
    Scheme,
    certify,
    check_local_coloring,
    osia_scheme,
    ovia_scheme,
    subspace_scheme,
    tdma_scheme,
)
from coloring.coloring_algorithms import Coloring, greedy_sli
from graphs.graph_model import ConflictGraph, merge_split_coloring, node_splitting_graph
from utils.utils_logger import logger
from utils.utils_seeding import derive_seed, make_rng

ENV_MODES = ("coloring", "local_coloring", "matrix_rank_reduction")
MAX_MATRIX_R = 10

#####################################
# Types
#####################################


@dataclass(frozen=True)
class EnvConfig:
    mode: str = "coloring"
    K: int = 3
    r: int = 3
    b: int = 1
    B: int = 32
    alpha: float = 0.5
    beta: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ENV_MODES:
            raise ValueError(f"mode must be one of {ENV_MODES}, got {self.mode!r}")
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.b != 1:
            raise ValueError("the environment works with b = 1; split nodes first for b > 1")
        if self.K < 1 or self.r < 1:
            raise ValueError(f"K and r must be positive, got K={self.K}, r={self.r}")
        if self.mode == "matrix_rank_reduction" and self.r > MAX_MATRIX_R:
            raise ValueError(f"matrix mode supports r <= {MAX_MATRIX_R}, got {self.r}")

    @property
    def alphabet(self) -> int:
        """A: largest symbol; 0 means deferred."""
        if self.mode == "matrix_rank_reduction":
            return 2**self.r - 1
        return self.K

    @property
    def cleanup_cutoff(self) -> int:
        return math.ceil(self.alpha * self.B)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class VertexState:
    s: tuple[int, ...]
    t: int = 0

    @property
    def deferred(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.s) if v == 0)

    @property
    def num_assigned(self) -> int:
        return sum(1 for v in self.s if v != 0)

    def digest(self) -> str:
        return hashlib.sha1(json.dumps([self.t, list(self.s)]).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class StepOutcome:
    next_state: VertexState
    reward: float
    done: bool
    success: bool
    diagnostics: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Observation:
    """Deferred nodes (sorted), their symmetric induced adjacency and per-node features."""

    nodes: tuple[int, ...]
    adjacency: np.ndarray
    features: np.ndarray


#####################################
# Transition
#####################################


def reset(cfg: EnvConfig, g: ConflictGraph) -> VertexState:
    return VertexState(s=(0,) * g.num_nodes, t=0)


def _monochromatic_reset(g: ConflictGraph, s: list[int]) -> set[int]:
    return {w for u, v in g.edges if s[u] and s[u] == s[v] for w in (u, v)}


def _local_reset(g: ConflictGraph, s: list[int], r: int) -> set[int]:
    rollback: set[int] = set()
    for i in range(g.num_nodes):
        closed = g.in_neighbors[i] | {i}
        if len({s[j] for j in closed if s[j]}) > r:
            rollback |= closed
    return rollback


def _matrix_reset(g: ConflictGraph, s: list[int], r: int) -> set[int]:
    rollback: set[int] = set()
    for i in range(g.num_nodes):
        closed = g.in_neighbors[i] | {i}
        if any(s[j] == 0 for j in closed):
            continue
        open_cols = [binary_vector(s[j], r) for j in g.in_neighbors[i]]
        r_open = rank_of_columns(open_cols, r)
        r_closed = rank_of_columns(open_cols + [binary_vector(s[i], r)], r)
        if r_closed - r_open != 1:
            rollback |= closed
    return rollback


def reward_components(state: VertexState, next_state: VertexState, cfg: EnvConfig, success: bool) -> tuple[float, float]:
    n = len(state.s)
    r_c = (next_state.num_assigned - state.num_assigned) / n if n else 0.0
    r_t = (cfg.B - next_state.t) / cfg.B if success else 0.0
    return r_c, r_t


def transition(cfg: EnvConfig, g: ConflictGraph, state: VertexState, action: Mapping[int, int]) -> StepOutcome:
    """Apply update, the clean-ups of cfg.mode, and compute the reward."""
    deferred = set(state.deferred)
    if set(action) != deferred:
        extra = sorted(set(action) - deferred)
        logger.error(f"Action keys do not match the deferred set (extra {extra[:5]}).")
        raise ValueError("action must be defined exactly on the deferred nodes")
    A = cfg.alphabet
    for node, value in action.items():
        if not 0 <= int(value) <= A:
            raise ValueError(f"action value {value} for node {node} outside 0..{A}")

    s = list(state.s)
    for node, value in action.items():
        s[node] = int(value)

    diagnostics = {"cleanup_1": 0, "cleanup_2": 0, "matrix": 0}
    if cfg.mode == "matrix_rank_reduction":
        rollback = _matrix_reset(g, s, cfg.r)
        diagnostics["matrix"] = sum(1 for i in rollback if s[i])
    else:
        # both rollback sets come from the same post-update snapshot
        rollback = _monochromatic_reset(g, s)
        diagnostics["cleanup_1"] = len(rollback)
        if cfg.mode == "local_coloring" and state.t < cfg.cleanup_cutoff:
            local = _local_reset(g, s, cfg.r)
            diagnostics["cleanup_2"] = sum(1 for i in local - rollback if s[i])
            rollback |= local
    for i in rollback:
        s[i] = 0

    next_state = VertexState(s=tuple(s), t=state.t + 1)
    success = next_state.num_assigned == g.num_nodes
    done = success or next_state.t >= cfg.B
    r_c, r_t = reward_components(state, next_state, cfg, success)
    return StepOutcome(next_state, r_c + cfg.beta * r_t, done, success, diagnostics)


#####################################
# Observation
#####################################


def observe(state: VertexState, g: ConflictGraph, cfg: EnvConfig) -> Observation:
    """Features: [t/B, in-neighbor one-hot sums over 0..A, out-neighbor one-hot sums over 0..A]."""
    A = cfg.alphabet
    nodes = state.deferred
    k = len(nodes)
    features = np.zeros((k, 2 * (A + 1) + 1), dtype=np.float64)
    features[:, 0] = state.t / cfg.B
    for row, i in enumerate(nodes):
        for j in g.in_neighbors[i]:
            features[row, 1 + state.s[j]] += 1.0
        for j in g.out_neighbors[i]:
            features[row, 2 + A + state.s[j]] += 1.0

    position = {v: row for row, v in enumerate(nodes)}
    adjacency = np.zeros((k, k), dtype=np.float64)
    for u, v in g.edges:
        if u in position and v in position:
            adjacency[position[u], position[v]] = 1.0
            adjacency[position[v], position[u]] = 1.0
    return Observation(nodes, adjacency, features)


#####################################
# Environment
#####################################


class LcgEnv:
    """Single-owner wrapper holding the current state of one episode."""

    def __init__(self, cfg: EnvConfig, g: ConflictGraph):
        self.cfg = cfg
        self.graph = g
        self.state = reset(cfg, g)

    def reset(self) -> VertexState:
        self.state = reset(self.cfg, self.graph)
        return self.state

    def step(self, action: Mapping[int, int]) -> StepOutcome:
        outcome = transition(self.cfg, self.graph, self.state, action)
        self.state = outcome.next_state
        return outcome

    def observe(self) -> Observation:
        return observe(self.state, self.graph, self.cfg)


# policy(env, observation, rng) -> one action per observation node
Policy = Callable[[LcgEnv, Observation, np.random.Generator], np.ndarray]


@dataclass
class EpisodeResult:
    final_state: VertexState
    success: bool
    total_reward: float
    steps: int
    trace: list[dict] = field(default_factory=list)


def run_episode(env: LcgEnv, policy: Policy, rng: np.random.Generator, record_trace: bool = False) -> EpisodeResult:
    env.reset()
    total = 0.0
    trace: list[dict] = []
    while True:
        obs = env.observe()
        actions = np.asarray(policy(env, obs, rng), dtype=np.int64)
        action = {node: int(a) for node, a in zip(obs.nodes, actions)}
        before = env.state
        outcome = env.step(action)
        total += outcome.reward
        if record_trace:
            trace.append(
                {
                    "t": before.t,
                    "state": before.digest(),
                    "action": {str(k): v for k, v in action.items()},
                    "reward": outcome.reward,
                    "rollback": dict(outcome.diagnostics),
                }
            )
        if outcome.done:
            return EpisodeResult(outcome.next_state, outcome.success, total, outcome.next_state.t, trace)


def write_trace_jsonl(path: pathlib.Path, trace: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for record in trace:
            f.write(json.dumps(record) + "\n")


#####################################
# Scheme Extraction
#####################################


def scheme_from_state(g: ConflictGraph, cfg: EnvConfig, state: VertexState, seed: int = 0) -> Scheme | None:
    """Certified scheme for a fully assigned state, or None."""
    if state.num_assigned != g.num_nodes:
        return None
    if cfg.mode == "matrix_rank_reduction":
        columns = {v: [binary_vector(state.s[v], cfg.r)] for v in range(g.num_nodes)}
        scheme = subspace_scheme(g, columns, b=1, r=cfg.r, mode="SSIA", seed=seed)
    else:
        coloring = Coloring(state.s, cfg.K)
        if cfg.mode == "coloring":
            scheme = tdma_scheme(g, coloring)
        else:
            r = max(check_local_coloring(g, coloring, cfg.K, cfg.r).max_count, 1)
            scheme = osia_scheme(g, coloring, cfg.K, min(r, cfg.K))
    scheme = certify(g, scheme)
    return scheme if scheme.certified else None


#####################################
# K-Selector
#####################################


def _attempt(g: ConflictGraph, cfg: EnvConfig, policy: Policy, attempts: int) -> VertexState | None:
    for attempt in range(attempts):
        rng = make_rng(cfg.seed, cfg.K, cfg.r, attempt)
        result = run_episode(LcgEnv(cfg, g), policy, rng)
        if result.success:
            return result.final_state
    return None


def _smallest_k(g: ConflictGraph, policy: Policy, template: EnvConfig, attempts: int) -> tuple[int, Coloring]:
    """Descend K from the SLI bound until an episode fails; returns the last success."""
    best = greedy_sli(g.undirected_adjacency)
    k = max(best.num_colors, 1)
    best_k = k
    while k >= 1:
        cfg = dataclasses.replace(template, mode="coloring", K=k, r=k)
        state = _attempt(g, cfg, policy, attempts)
        if state is None:
            break
        best, best_k = Coloring(state.s, k), k
        k -= 1
    return best_k, Coloring(best.colors, best_k)


def _smallest_r(
    g: ConflictGraph, policy: Policy, template: EnvConfig, K: int, attempts: int
) -> tuple[int, Coloring] | None:
    """Descend r = K-1, K-2, ... at fixed K; None when no r < K succeeded."""
    found = None
    for r in range(K - 1, 0, -1):
        cfg = dataclasses.replace(template, mode="local_coloring", K=K, r=r)
        state = _attempt(g, cfg, policy, attempts)
        if state is None:
            break
        coloring = Coloring(state.s, K)
        if check_local_coloring(g, coloring, K, r).max_count > r:
            # complete only through the plain K-coloring fallback
            break
        found = (r, coloring)
    return found


def k_selector(
    g: ConflictGraph,
    mode: str,
    policy: Policy,
    cfg_template: EnvConfig,
    k_slack: int = 0,
    attempts: int = 1,
    r_max: int | None = None,
) -> Scheme:
    """
    Smallest-K search seeded by greedy_sli. coloring -> TDMA scheme;
    local_coloring -> OSIA with the smallest r found at K .. K + k_slack;
    matrix_rank_reduction -> SSIA with the smallest successful r, starting
    from min(K, r_max).
    """
    if mode not in ENV_MODES:
        raise ValueError(f"mode must be one of {ENV_MODES}, got {mode!r}")

    K, coloring = _smallest_k(g, policy, cfg_template, attempts)
    logger.debug(f"K-selector: smallest successful K = {K}")

    if mode == "coloring":
        return certify(g, tdma_scheme(g, coloring))

    if mode == "local_coloring":
        best_r, best_coloring, best_K = K, coloring, K
        for k in range(K, K + k_slack + 1):
            found = _smallest_r(g, policy, cfg_template, k, attempts)
            if found is not None and found[0] < best_r:
                best_r, best_coloring, best_K = found[0], found[1], k
        logger.debug(f"K-selector: local coloring with K={best_K}, r={best_r}")
        return certify(g, osia_scheme(g, best_coloring, best_K, best_r))

    # matrix rank reduction: r = K is always reachable through an orthogonal coloring
    orthogonal = {v: [tuple(int(c == coloring.colors[v]) for c in range(1, K + 1))] for v in range(g.num_nodes)}
    best_scheme = certify(g, subspace_scheme(g, orthogonal, b=1, r=K, seed=cfg_template.seed))
    top = min(K, MAX_MATRIX_R, r_max or K)
    for r in range(top, 0, -1):
        cfg = dataclasses.replace(cfg_template, mode="matrix_rank_reduction", K=K, r=r)
        state = _attempt(g, cfg, policy, attempts)
        if state is None:
            break
        scheme = scheme_from_state(g, cfg, state, seed=derive_seed(cfg.seed, r))
        if scheme is None:
            break
        if scheme.d_sym >= best_scheme.d_sym:
            best_scheme = scheme
    return best_scheme


#####################################
# Fractional and Vector Solvers (node splitting)
#####################################


def replicate_osia(g: ConflictGraph, osia: Scheme, b: int) -> Scheme:
    """
    b-fold replication of a (K, r)-local coloring: color c becomes the block
    {(c-1)b+1, ..., cb}, a (Kb, rb, b) fractional local coloring with the same d_sym.
    """
    colors = osia.coloring().colors
    fractional = {v: frozenset((c - 1) * b + i + 1 for i in range(b)) for v, c in enumerate(colors)}
    return certify(g, ovia_scheme(g, fractional, osia.K * b, osia.r * b, b))


def solve_fractional(
    g: ConflictGraph,
    b: int,
    policy: Policy,
    cfg_template: EnvConfig,
    k_slack: int = 0,
    attempts: int = 1,
    osia: Scheme | None = None,
) -> Scheme:
    """
    Local coloring of the b-split graph merged back into an OVIA scheme. The
    replicated OSIA solution (searched here unless given) is kept whenever the
    split search does worse, so d_sym never drops below OSIA.
    """
    if b < 1:
        raise ValueError(f"split order b must be positive, got {b}")
    split = node_splitting_graph(g, b)
    split_scheme = k_selector(split, "local_coloring", policy, cfg_template, k_slack=k_slack, attempts=attempts)
    colors = split_scheme.coloring().colors
    merged = merge_split_coloring(g, b, list(colors))
    searched = certify(g, ovia_scheme(g, merged, split_scheme.K, split_scheme.r, b))

    if osia is None:
        osia = k_selector(g, "local_coloring", policy, cfg_template, k_slack=k_slack, attempts=attempts)
    if not osia.certified:
        return searched
    replicated = replicate_osia(g, osia, b)
    if replicated.certified and (not searched.certified or searched.d_sym < replicated.d_sym):
        logger.debug(f"OVIA-{b}: split search reached {searched.d_sym}, keeping replicated OSIA at {replicated.d_sym}")
        return replicated
    return searched


def solve_subspace_vector(
    g: ConflictGraph, b: int, policy: Policy, cfg_template: EnvConfig, attempts: int = 1, r_max: int | None = None
) -> Scheme:
    """SSIA on the b-split graph; each node collects the vectors of its b copies."""
    split = node_splitting_graph(g, b)
    split_scheme = k_selector(split, "matrix_rank_reduction", policy, cfg_template, attempts=attempts, r_max=r_max)
    columns = {
        v: [split_scheme.vectors[split_scheme.assignment[v * b + i][0]] for i in range(b)] for v in range(g.num_nodes)
    }
    return certify(g, subspace_scheme(g, columns, b=b, r=split_scheme.r, mode="SVIA", seed=cfg_template.seed))
