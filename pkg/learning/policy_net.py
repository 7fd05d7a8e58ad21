"""
policy_net.py

Graph-convolutional policy and value networks with hand-written gradients.

Layer:   H' = ReLU(H W1 + A_hat H W2),  A_hat = D^-1/2 (Adj + I) D^-1/2
Trunk:   four layers over the deferred-node subgraph (shared by both heads)
Policy:  per-node softmax over A + 1 logits (index 0 = defer, k = symbol k)
Value:   sum-pooled final embeddings dotted with a weight vector (no bias)

Parameter order (gradients, Adam moments and checkpoints all use it):
W1_0, W2_0, W1_1, W2_1, W1_2, W2_2, W1_3, W2_3, Wp, bp, wv

Checkpoint file: one JSON header line, then float64 little-endian arrays
in the order above.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import hashlib
import json
import pathlib
from collections.abc import Mapping
from dataclasses import dataclass

# import external modules
import numpy as np

# import from local modules
from learning.lcg_env import LcgEnv, Observation, Policy
from utils.utils_logger import logger

NUM_LAYERS = 4
CHECKPOINT_VERSION = 1
POLICY_HEAD_SCALE = 1e-3

#####################################
# Parameters
#####################################


@dataclass(frozen=True)
class PolicyParams:
    """Immutable snapshot; updates build a new instance."""

    A: int
    input_dim: int
    hidden: int
    arrays: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        expected = param_shapes(self.A, self.input_dim, self.hidden)
        shapes = [a.shape for a in self.arrays]
        if shapes != expected:
            raise ValueError(f"parameter shapes {shapes} do not match {expected}")

    @property
    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.arrays[2 * n], self.arrays[2 * n + 1]) for n in range(NUM_LAYERS)]

    @property
    def Wp(self) -> np.ndarray:
        return self.arrays[2 * NUM_LAYERS]

    @property
    def bp(self) -> np.ndarray:
        return self.arrays[2 * NUM_LAYERS + 1]

    @property
    def wv(self) -> np.ndarray:
        return self.arrays[2 * NUM_LAYERS + 2]

    def replace_arrays(self, arrays: list[np.ndarray]) -> PolicyParams:
        return PolicyParams(self.A, self.input_dim, self.hidden, tuple(np.array(a, dtype=np.float64) for a in arrays))

    def checksum(self) -> str:
        h = hashlib.sha1()
        for a in self.arrays:
            h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return h.hexdigest()


def param_shapes(A: int, input_dim: int, hidden: int) -> list[tuple[int, ...]]:
    shapes: list[tuple[int, ...]] = []
    width = input_dim
    for _ in range(NUM_LAYERS):
        shapes += [(width, hidden), (width, hidden)]
        width = hidden
    shapes += [(hidden, A + 1), (A + 1,), (hidden,)]
    return shapes


def input_dim_for(A: int) -> int:
    return 2 * (A + 1) + 1


def init_params(A: int, input_dim: int | None = None, hidden: int = 128, seed: int = 0) -> PolicyParams:
    """Glorot-uniform trunk; a tiny policy head so the initial policy is close to uniform."""
    input_dim = input_dim_for(A) if input_dim is None else input_dim
    rng = np.random.default_rng(seed)
    arrays = []
    for shape in param_shapes(A, input_dim, hidden):
        if len(shape) == 2:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            arrays.append(rng.uniform(-limit, limit, size=shape))
        else:
            arrays.append(np.zeros(shape))
    arrays[2 * NUM_LAYERS] *= POLICY_HEAD_SCALE
    return PolicyParams(A, input_dim, hidden, tuple(arrays))


def zero_params(A: int, input_dim: int | None = None, hidden: int = 128) -> PolicyParams:
    input_dim = input_dim_for(A) if input_dim is None else input_dim
    return PolicyParams(A, input_dim, hidden, tuple(np.zeros(s) for s in param_shapes(A, input_dim, hidden)))


#####################################
# Graph Convolution
#####################################


def normalized_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """D^-1/2 (Adj + I) D^-1/2 on the symmetrized adjacency; degrees are at least 1."""
    k = adjacency.shape[0]
    sym = np.maximum(adjacency, adjacency.T) + np.eye(k)
    degrees = np.maximum(sym.sum(axis=1), 1.0)
    inv_sqrt = 1.0 / np.sqrt(degrees)
    return sym * inv_sqrt[:, None] * inv_sqrt[None, :]


def layer_forward(H: np.ndarray, a_hat: np.ndarray, W1: np.ndarray, W2: np.ndarray) -> tuple[np.ndarray, tuple]:
    if H.shape[1] != W1.shape[0] or W1.shape != W2.shape or a_hat.shape != (H.shape[0], H.shape[0]):
        raise ValueError(f"shape mismatch: H {H.shape}, A_hat {a_hat.shape}, W1 {W1.shape}, W2 {W2.shape}")
    propagated = a_hat @ H
    Z = H @ W1 + propagated @ W2
    return np.maximum(Z, 0.0), (H, propagated, Z)


def layer_backward(
    dH_out: np.ndarray, cache: tuple, a_hat: np.ndarray, W1: np.ndarray, W2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dH_in, dW1, dW2)."""
    H, propagated, Z = cache
    dZ = dH_out * (Z > 0)
    dW1 = H.T @ dZ
    dW2 = propagated.T @ dZ
    dH = dZ @ W1.T + a_hat.T @ (dZ @ W2.T)
    return dH, dW1, dW2


#####################################
# Forward / Backward
#####################################


@dataclass
class ForwardPass:
    logits: np.ndarray
    probs: np.ndarray
    value: float
    cache: dict


def _softmax(logits: np.ndarray) -> np.ndarray:
    if logits.shape[0] == 0:
        return logits.copy()
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def forward(features: np.ndarray, adjacency: np.ndarray, params: PolicyParams) -> ForwardPass:
    if features.shape[1] != params.input_dim:
        raise ValueError(f"feature width {features.shape[1]} does not match input_dim {params.input_dim}")
    a_hat = normalized_adjacency(adjacency)
    H = features
    layer_caches = []
    for W1, W2 in params.layers:
        H, cache = layer_forward(H, a_hat, W1, W2)
        layer_caches.append(cache)
    logits = H @ params.Wp + params.bp
    value = float(H.sum(axis=0) @ params.wv)
    return ForwardPass(logits, _softmax(logits), value, {"a_hat": a_hat, "layers": layer_caches, "H": H})


def backward(fp: ForwardPass, params: PolicyParams, dlogits: np.ndarray, dvalue: float) -> list[np.ndarray]:
    """Gradients of a scalar loss given dL/dlogits and dL/dvalue, in parameter order."""
    H = fp.cache["H"]
    a_hat = fp.cache["a_hat"]
    dWp = H.T @ dlogits
    dbp = dlogits.sum(axis=0)
    dwv = H.sum(axis=0) * dvalue
    dH = dlogits @ params.Wp.T + dvalue * params.wv[None, :]

    grads: list[np.ndarray] = [None] * (2 * NUM_LAYERS)  # type: ignore[list-item]
    for n in reversed(range(NUM_LAYERS)):
        W1, W2 = params.layers[n]
        dH, dW1, dW2 = layer_backward(dH, fp.cache["layers"][n], a_hat, W1, W2)
        grads[2 * n], grads[2 * n + 1] = dW1, dW2
    return grads + [dWp, dbp, dwv]


def policy_forward(obs: Observation, params: PolicyParams) -> np.ndarray:
    """Per-node probabilities over {0 (defer), 1..A}; shape (len(obs.nodes), A + 1)."""
    if not obs.nodes:
        return np.zeros((0, params.A + 1))
    return forward(obs.features, obs.adjacency, params).probs


def value_forward(obs: Observation, params: PolicyParams) -> float:
    if not obs.nodes:
        return 0.0
    return forward(obs.features, obs.adjacency, params).value


def sample_actions(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row."""
    if probs.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    u = rng.random(probs.shape[0])
    cumulative = np.cumsum(probs, axis=1)
    actions = (cumulative < u[:, None]).sum(axis=1)
    return np.minimum(actions, probs.shape[1] - 1).astype(np.int64)


def log_prob(probs: np.ndarray, actions: np.ndarray) -> float:
    """Joint log-probability of independent per-node actions."""
    if probs.shape[0] == 0:
        return 0.0
    return float(np.log(probs[np.arange(len(actions)), actions]).sum())


#####################################
# Policies
#####################################


class LearnedPolicy:
    """
    Samples from the network. params_by_alphabet maps A to a snapshot; an env
    whose alphabet has no snapshot goes to `fallback` or raises.
    """

    def __init__(self, params_by_alphabet: Mapping[int, PolicyParams] | PolicyParams, fallback: Policy | None = None):
        if isinstance(params_by_alphabet, PolicyParams):
            params_by_alphabet = {params_by_alphabet.A: params_by_alphabet}
        self.params_by_alphabet = dict(params_by_alphabet)
        self.fallback = fallback

    def __call__(self, env: LcgEnv, obs: Observation, rng: np.random.Generator) -> np.ndarray:
        A = env.cfg.alphabet
        params = self.params_by_alphabet.get(A)
        if params is None:
            if self.fallback is None:
                raise ValueError(f"no trained parameters for alphabet size {A}")
            logger.debug(f"No parameters for alphabet {A}; using fallback policy.")
            return self.fallback(env, obs, rng)
        return sample_actions(policy_forward(obs, params), rng)


class RandomPolicy:
    """Uniform over {0, ..., A} per deferred node."""

    def __call__(self, env: LcgEnv, obs: Observation, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, env.cfg.alphabet + 1, size=len(obs.nodes)).astype(np.int64)


class GreedyDeferPolicy:
    """
    Visit deferred nodes by saturation (distinct assigned neighbor symbols, then
    index). With probability rho give the lowest symbol unused by any labeled
    neighbor, this step's choices included; otherwise defer.
    """

    def __init__(self, rho: float = 0.5):
        if not 0.0 <= rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {rho}")
        self.rho = rho

    def __call__(self, env: LcgEnv, obs: Observation, rng: np.random.Generator) -> np.ndarray:
        s = list(env.state.s)
        adjacency = env.graph.undirected_adjacency
        A = env.cfg.alphabet
        coin = rng.random(len(obs.nodes))
        position = {v: k for k, v in enumerate(obs.nodes)}
        order = sorted(obs.nodes, key=lambda v: (-len({s[w] for w in adjacency[v] if s[w]}), v))
        actions = np.zeros(len(obs.nodes), dtype=np.int64)
        for v in order:
            if coin[position[v]] >= self.rho:
                continue
            used = {s[w] for w in adjacency[v]}
            symbol = next((c for c in range(1, A + 1) if c not in used), 0)
            actions[position[v]] = symbol
            s[v] = symbol
        return actions


def reference_policies(rho: float = 0.5) -> dict[str, Policy]:
    return {"random": RandomPolicy(), "greedy_defer": GreedyDeferPolicy(rho)}


#####################################
# Checkpoints
#####################################


def save_checkpoint(path: pathlib.Path, params: PolicyParams, extra: Mapping | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "version": CHECKPOINT_VERSION,
        "A": params.A,
        "input_dim": params.input_dim,
        "hidden": params.hidden,
        "layer_widths": [params.input_dim] + [params.hidden] * NUM_LAYERS,
        "extra": dict(extra or {}),
    }
    with path.open("wb") as f:
        f.write((json.dumps(header) + "\n").encode("utf-8"))
        for a in params.arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    logger.info(f"Saved checkpoint (A={params.A}) to {path}")


def load_checkpoint(path: pathlib.Path) -> tuple[PolicyParams, dict]:
    """Returns the parameters and the header's `extra` mapping."""
    with path.open("rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        payload = f.read()
    if header.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    A, input_dim, hidden = int(header["A"]), int(header["input_dim"]), int(header["hidden"])
    flat = np.frombuffer(payload, dtype="<f8")
    arrays = []
    offset = 0
    for shape in param_shapes(A, input_dim, hidden):
        size = int(np.prod(shape))
        arrays.append(flat[offset : offset + size].reshape(shape).astype(np.float64))
        offset += size
    if offset != flat.size:
        raise ValueError(f"checkpoint payload has {flat.size} values, expected {offset}")
    logger.info(f"Loaded checkpoint (A={A}) from {path}")
    return PolicyParams(A, input_dim, hidden, tuple(arrays)), header.get("extra", {})
