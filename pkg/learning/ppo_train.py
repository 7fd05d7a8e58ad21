"""
ppo_train.py

Proximal policy optimization over the learn-to-defer environment.

One iteration = collect `rollout_parallelism` complete episodes with a
frozen parameter snapshot, compute GAE advantages, then run
`epochs_per_batch` full-batch passes of the clipped surrogate loss with
Adam and global gradient-norm clipping.

Every iteration draws its randomness from derive_seed(seed, iteration), so
a run resumed from a training-state checkpoint reproduces the rest of an
uninterrupted run.

Curve CSV columns: iteration, mean_reward, success_ratio, entropy.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import csv
import dataclasses
import pathlib
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

# import external modules
import numpy as np

# import from local modules
from coding.ia_verify import Scheme
from graphs.graph_model import ConflictGraph
from learning.lcg_env import EnvConfig, LcgEnv, Observation, Policy, VertexState, run_episode, scheme_from_state
from learning.policy_net import (
    PolicyParams,
    backward,
    forward,
    init_params,
    load_checkpoint,
    log_prob,
    sample_actions,
    save_checkpoint,
)
from utils.utils_logger import logger
from utils.utils_seeding import derive_seed, make_rng

CURVE_FIELDS = ["iteration", "mean_reward", "success_ratio", "entropy"]


class TrainingDivergedError(RuntimeError):
    """A loss or gradient became non-finite."""


#####################################
# Configuration
#####################################


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1000
    lr: float = 0.001
    grad_clip_norm: float = 0.2
    rollout_parallelism: int = 20
    clip_eps: float = 0.2
    value_coeff: float = 0.5
    entropy_coeff: float = 0.01
    epochs_per_batch: int = 4
    gamma: float = 1.0
    gae_lambda: float = 0.95
    hidden: int = 128
    checkpoint_every: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 0 or self.rollout_parallelism < 1 or self.epochs_per_batch < 1:
            raise ValueError("iterations, rollout_parallelism and epochs_per_batch must be positive")
        if not 0 < self.clip_eps < 1:
            raise ValueError(f"clip_eps must lie in (0, 1), got {self.clip_eps}")
        if self.lr <= 0 or self.grad_clip_norm <= 0:
            raise ValueError("lr and grad_clip_norm must be positive")


#####################################
# Rollouts
#####################################


@dataclass(frozen=True)
class StepRecord:
    obs: Observation
    actions: np.ndarray
    log_prob: float
    reward: float
    value: float
    done: bool


@dataclass
class RolloutBatch:
    episodes: list[list[StepRecord]]
    successes: list[bool]

    @property
    def num_steps(self) -> int:
        return sum(len(ep) for ep in self.episodes)

    @property
    def mean_reward(self) -> float:
        return float(np.mean([sum(s.reward for s in ep) for ep in self.episodes])) if self.episodes else 0.0

    @property
    def success_ratio(self) -> float:
        return float(np.mean(self.successes)) if self.successes else 0.0


def collect_rollouts(envs: Sequence[LcgEnv], params: PolicyParams, rngs: Sequence[np.random.Generator]) -> RolloutBatch:
    """Run one complete episode per env with the frozen snapshot `params`."""
    episodes, successes = [], []
    for env, rng in zip(envs, rngs):
        env.reset()
        steps: list[StepRecord] = []
        while True:
            obs = env.observe()
            if obs.nodes:
                fp = forward(obs.features, obs.adjacency, params)
                actions = sample_actions(fp.probs, rng)
                lp, value = log_prob(fp.probs, actions), fp.value
            else:
                actions, lp, value = np.zeros(0, dtype=np.int64), 0.0, 0.0
            outcome = env.step({node: int(a) for node, a in zip(obs.nodes, actions)})
            steps.append(StepRecord(obs, actions, lp, outcome.reward, value, outcome.done))
            if outcome.done:
                successes.append(outcome.success)
                break
        episodes.append(steps)
    return RolloutBatch(episodes, successes)


def compute_gae(
    rewards: Sequence[float], values: Sequence[float], gamma: float, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns for one finished episode (zero bootstrap after the last step)."""
    n = len(rewards)
    advantages = np.zeros(n)
    gae = 0.0
    for t in reversed(range(n)):
        next_value = values[t + 1] if t + 1 < n else 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        gae = delta + gamma * lam * gae
        advantages[t] = gae
    return advantages, advantages + np.asarray(values, dtype=np.float64)


#####################################
# Optimizer
#####################################


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: PolicyParams) -> AdamState:
        return cls(tuple(np.zeros_like(a) for a in params.arrays), tuple(np.zeros_like(a) for a in params.arrays), 0)


def adam_step(
    params: PolicyParams,
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[PolicyParams, AdamState]:
    t = state.step + 1
    m = tuple(beta1 * mi + (1 - beta1) * g for mi, g in zip(state.m, grads))
    v = tuple(beta2 * vi + (1 - beta2) * g * g for vi, g in zip(state.v, grads))
    new_arrays = []
    for a, mi, vi in zip(params.arrays, m, v):
        m_hat = mi / (1 - beta1**t)
        v_hat = vi / (1 - beta2**t)
        new_arrays.append(a - lr * m_hat / (np.sqrt(v_hat) + eps))
    return params.replace_arrays(new_arrays), AdamState(m, v, t)


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scale all gradients together so their joint norm is at most max_norm; returns the pre-clip norm."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        return [g * scale for g in grads], norm
    return [np.array(g) for g in grads], norm


#####################################
# PPO Update
#####################################


@dataclass(frozen=True)
class UpdateDiagnostics:
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float
    clip_fraction: float


def _batch_samples(batch: RolloutBatch, cfg: TrainConfig) -> list[tuple[StepRecord, float, float]]:
    samples = []
    for ep in batch.episodes:
        adv, ret = compute_gae([s.reward for s in ep], [s.value for s in ep], cfg.gamma, cfg.gae_lambda)
        samples += [(s, float(a), float(r)) for s, a, r in zip(ep, adv, ret) if s.obs.nodes]
    return samples


def _loss_and_grads(
    samples: list[tuple[StepRecord, float, float]], params: PolicyParams, cfg: TrainConfig
) -> tuple[list[np.ndarray], dict]:
    grads = [np.zeros_like(a) for a in params.arrays]
    totals = {"policy": 0.0, "value": 0.0, "entropy": 0.0, "nodes": 0, "clipped": 0}
    n = len(samples)
    for record, advantage, ret in samples:
        fp = forward(record.obs.features, record.obs.adjacency, params)
        probs = fp.probs
        rows = np.arange(len(record.actions))
        logp = float(np.log(probs[rows, record.actions]).sum())
        ratio = float(np.exp(logp - record.log_prob))
        clipped_ratio = min(max(ratio, 1 - cfg.clip_eps), 1 + cfg.clip_eps)
        unclipped_term, clipped_term = ratio * advantage, clipped_ratio * advantage
        # the clipped branch is active only when it is strictly smaller
        d_logp = -advantage * ratio if unclipped_term <= clipped_term else 0.0
        if unclipped_term > clipped_term:
            totals["clipped"] += 1

        log_probs = np.log(probs)
        node_entropy = -(probs * log_probs).sum(axis=1)
        onehot = np.zeros_like(probs)
        onehot[rows, record.actions] = 1.0
        dlogits = d_logp * (onehot - probs)
        dlogits += cfg.entropy_coeff * probs * (log_probs + node_entropy[:, None])
        dvalue = 2.0 * cfg.value_coeff * (fp.value - ret)

        for acc, g in zip(grads, backward(fp, params, dlogits, dvalue)):
            acc += g / n
        totals["policy"] += -min(unclipped_term, clipped_term) / n
        totals["value"] += (fp.value - ret) ** 2 / n
        totals["entropy"] += float(node_entropy.sum())
        totals["nodes"] += len(record.actions)
    return grads, totals


def ppo_update(
    batch: RolloutBatch, params: PolicyParams, adam: AdamState, cfg: TrainConfig
) -> tuple[PolicyParams, AdamState, UpdateDiagnostics]:
    """Clipped surrogate + value MSE - entropy bonus, full batch, epochs_per_batch passes."""
    samples = _batch_samples(batch, cfg)
    if not samples:
        raise ValueError("rollout batch has no decision steps")
    diagnostics = None
    for _ in range(cfg.epochs_per_batch):
        grads, totals = _loss_and_grads(samples, params, cfg)
        loss = totals["policy"] + cfg.value_coeff * totals["value"]
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            logger.error(f"Non-finite PPO loss or gradient (policy {totals['policy']}, value {totals['value']}).")
            raise TrainingDivergedError("non-finite loss or gradient during PPO update")
        clipped, norm = clip_by_global_norm(grads, cfg.grad_clip_norm)
        params, adam = adam_step(params, clipped, adam, cfg.lr)
        diagnostics = UpdateDiagnostics(
            policy_loss=totals["policy"],
            value_loss=totals["value"],
            entropy=totals["entropy"] / max(totals["nodes"], 1),
            grad_norm=norm,
            clip_fraction=totals["clipped"] / len(samples),
        )
    return params, adam, diagnostics


#####################################
# Training Loop
#####################################


@dataclass(frozen=True)
class CurvePoint:
    iteration: int
    mean_reward: float
    success_ratio: float
    entropy: float


@dataclass
class TrainResult:
    params: PolicyParams
    curve: list[CurvePoint] = field(default_factory=list)


def write_curve_csv(path: pathlib.Path, curve: Sequence[CurvePoint]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CURVE_FIELDS)
        for p in curve:
            writer.writerow([p.iteration, f"{p.mean_reward:.10g}", f"{p.success_ratio:.10g}", f"{p.entropy:.10g}"])


def save_training_state(
    path: pathlib.Path, params: PolicyParams, adam: AdamState, iteration: int, curve: Sequence[CurvePoint], env_cfg: EnvConfig
) -> None:
    """Parameters plus Adam moments, as three checkpoint files sharing one stem."""
    extra = {"iteration": iteration, "adam_step": adam.step, "env": env_cfg.to_dict(), "curve": [dataclasses.asdict(p) for p in curve]}
    save_checkpoint(path, params, extra)
    save_checkpoint(path.with_suffix(".adam_m"), params.replace_arrays(list(adam.m)))
    save_checkpoint(path.with_suffix(".adam_v"), params.replace_arrays(list(adam.v)))


def load_training_state(path: pathlib.Path) -> tuple[PolicyParams, AdamState, int, list[CurvePoint]]:
    params, extra = load_checkpoint(path)
    m, _ = load_checkpoint(path.with_suffix(".adam_m"))
    v, _ = load_checkpoint(path.with_suffix(".adam_v"))
    curve = [CurvePoint(**p) for p in extra.get("curve", [])]
    return params, AdamState(m.arrays, v.arrays, int(extra["adam_step"])), int(extra["iteration"]), curve


def train(
    dataset: Sequence[ConflictGraph],
    env_cfg: EnvConfig,
    cfg: TrainConfig,
    checkpoint_path: pathlib.Path | None = None,
    curve_path: pathlib.Path | None = None,
    state_path: pathlib.Path | None = None,
    resume: bool = False,
) -> TrainResult:
    """
    Train on graphs drawn uniformly from `dataset` with env_cfg (K set to the
    dataset's chromatic number by the caller). One iteration counts one
    collect + update cycle.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    A = env_cfg.alphabet
    if resume and state_path is not None and state_path.exists():
        params, adam, start, curve = load_training_state(state_path)
        logger.info(f"Resuming training at iteration {start} from {state_path}")
    else:
        params = init_params(A, hidden=cfg.hidden, seed=derive_seed(cfg.seed, 0))
        adam, start, curve = AdamState.zeros_like(params), 0, []

    for iteration in range(start, cfg.iterations):
        rng = make_rng(cfg.seed, 1, iteration)
        picks = rng.integers(0, len(dataset), size=cfg.rollout_parallelism)
        envs = [LcgEnv(dataclasses.replace(env_cfg, seed=derive_seed(cfg.seed, 2, iteration, k)), dataset[int(i)]) for k, i in enumerate(picks)]
        rngs = [make_rng(cfg.seed, 3, iteration, k) for k in range(cfg.rollout_parallelism)]

        snapshot = params.checksum()
        batch = collect_rollouts(envs, params, rngs)
        if params.checksum() != snapshot:
            raise RuntimeError("parameters changed during rollout collection")

        diag = None
        if any(step.obs.nodes for ep in batch.episodes for step in ep):
            try:
                params, adam, diag = ppo_update(batch, params, adam, cfg)
            except TrainingDivergedError:
                if checkpoint_path is not None:
                    save_checkpoint(checkpoint_path, params, {"env": env_cfg.to_dict(), "iteration": iteration})
                    logger.error(f"Training diverged at iteration {iteration}; kept last good checkpoint {checkpoint_path}")
                raise

        point = CurvePoint(iteration, batch.mean_reward, batch.success_ratio, diag.entropy if diag else 0.0)
        curve.append(point)
        logger.debug(f"iter {iteration}: reward {point.mean_reward:.4f}, success {point.success_ratio:.3f}, entropy {point.entropy:.4f}")
        if (iteration + 1) % cfg.checkpoint_every == 0 or iteration + 1 == cfg.iterations:
            logger.info(f"Iteration {iteration + 1}/{cfg.iterations}: mean reward {point.mean_reward:.4f}, success ratio {point.success_ratio:.3f}")
            if checkpoint_path is not None:
                save_checkpoint(checkpoint_path, params, {"env": env_cfg.to_dict(), "iteration": iteration + 1})
            if state_path is not None:
                save_training_state(state_path, params, adam, iteration + 1, curve, env_cfg)
            if curve_path is not None:
                write_curve_csv(curve_path, curve)

    return TrainResult(params, curve)


#####################################
# Evaluation
#####################################


@dataclass(frozen=True)
class BestOfN:
    success: bool
    scheme: Scheme | None
    steps: int
    state: VertexState | None

    @property
    def d_sym(self) -> Fraction:
        return self.scheme.d_sym if self.scheme is not None else Fraction(0)


def evaluate_best_of_n(policy: Policy, graph: ConflictGraph, n: int, env_cfg: EnvConfig, seed: int = 0) -> BestOfN:
    """
    n seeded episodes; best = success first, then largest d_sym, then fewest
    iterations. When every episode fails the result has success=False.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    best: BestOfN | None = None
    for k in range(n):
        cfg = dataclasses.replace(env_cfg, seed=derive_seed(seed, k))
        result = run_episode(LcgEnv(cfg, graph), policy, make_rng(seed, 4, k))
        scheme = scheme_from_state(graph, cfg, result.final_state, seed=cfg.seed) if result.success else None
        candidate = BestOfN(scheme is not None, scheme, result.steps, result.final_state)
        if best is None or _rank(candidate) > _rank(best):
            best = candidate
    return best


def _rank(result: BestOfN) -> tuple:
    return (result.success, result.d_sym, -result.steps)
