import numpy as np
import pytest

from graphs.graph_model import ConflictGraph
from learning.lcg_env import EnvConfig, LcgEnv, Observation
from learning.policy_net import (
    GreedyDeferPolicy,
    LearnedPolicy,
    RandomPolicy,
    backward,
    forward,
    init_params,
    input_dim_for,
    layer_forward,
    load_checkpoint,
    log_prob,
    normalized_adjacency,
    param_shapes,
    policy_forward,
    sample_actions,
    save_checkpoint,
    value_forward,
)

A = 3
HIDDEN = 6


def random_graph_inputs(seed, k=5):
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(k, input_dim_for(A)))
    upper = np.triu((rng.random((k, k)) < 0.4).astype(float), 1)
    return features, upper + upper.T


def random_params(seed):
    params = init_params(A, hidden=HIDDEN, seed=seed)
    rng = np.random.default_rng(seed + 100)
    # a larger policy head so the check also exercises non-uniform softmax
    arrays = list(params.arrays)
    arrays[-3] = rng.normal(size=arrays[-3].shape)
    arrays[-2] = rng.normal(size=arrays[-2].shape)
    arrays[-1] = rng.normal(size=arrays[-1].shape)
    return params.replace_arrays(arrays)


def scalar_loss(features, adjacency, params, coeff_logits, coeff_value):
    fp = forward(features, adjacency, params)
    return float((fp.logits * coeff_logits).sum() + coeff_value * fp.value)


@pytest.mark.parametrize("seed", range(20))
def test_backward_matches_finite_differences(seed):
    features, adjacency = random_graph_inputs(seed)
    params = random_params(seed)
    rng = np.random.default_rng(seed + 7)
    coeff_logits = rng.normal(size=(features.shape[0], A + 1))
    coeff_value = 0.7

    fp = forward(features, adjacency, params)
    grads = backward(fp, params, coeff_logits, coeff_value)
    assert [g.shape for g in grads] == param_shapes(A, input_dim_for(A), HIDDEN)

    eps = 1e-6
    for index, array in enumerate(params.arrays):
        for _ in range(3):
            pos = tuple(int(rng.integers(s)) for s in array.shape)
            plus = [a.copy() for a in params.arrays]
            minus = [a.copy() for a in params.arrays]
            plus[index][pos] += eps
            minus[index][pos] -= eps
            numeric = (
                scalar_loss(features, adjacency, params.replace_arrays(plus), coeff_logits, coeff_value)
                - scalar_loss(features, adjacency, params.replace_arrays(minus), coeff_logits, coeff_value)
            ) / (2 * eps)
            assert grads[index][pos] == pytest.approx(numeric, rel=1e-4, abs=1e-6)


def test_permuting_nodes_permutes_outputs():
    features, adjacency = random_graph_inputs(3, k=6)
    params = random_params(3)
    perm = np.array([3, 0, 5, 1, 4, 2])
    base = forward(features, adjacency, params)
    moved = forward(features[perm], adjacency[np.ix_(perm, perm)], params)
    np.testing.assert_allclose(moved.logits, base.logits[perm], atol=1e-10)
    assert moved.value == pytest.approx(base.value)


def test_normalized_adjacency_is_symmetric_with_self_loops():
    a_hat = normalized_adjacency(np.array([[0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(a_hat, a_hat.T)
    np.testing.assert_allclose(a_hat, [[0.5, 0.5], [0.5, 0.5]])


def test_layer_shape_mismatch_raises():
    params = init_params(A, hidden=HIDDEN)
    W1, W2 = params.layers[0]
    with pytest.raises(ValueError):
        layer_forward(np.zeros((2, 3)), np.eye(2), W1, W2)


def test_initial_policy_is_nearly_uniform():
    features, adjacency = random_graph_inputs(4)
    probs = forward(features, adjacency, init_params(A, hidden=HIDDEN, seed=4)).probs
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    assert np.abs(probs - 1.0 / (A + 1)).max() < 0.05


def test_sample_actions_follow_point_masses():
    probs = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]])
    actions = sample_actions(probs, np.random.default_rng(0))
    assert actions.tolist() == [1, 3, 0]
    assert log_prob(probs, actions) == pytest.approx(0.0)
    assert sample_actions(np.zeros((0, 4)), np.random.default_rng(0)).shape == (0,)


def test_sample_actions_frequencies():
    probs = np.tile([0.1, 0.2, 0.3, 0.4], (20_000, 1))
    actions = sample_actions(probs, np.random.default_rng(1))
    freq = np.bincount(actions, minlength=4) / len(actions)
    np.testing.assert_allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.02)


def test_checkpoint_round_trip(tmp_path):
    params = init_params(A, hidden=HIDDEN, seed=9)
    path = tmp_path / "policy.ckpt"
    save_checkpoint(path, params, {"note": "unit"})
    loaded, extra = load_checkpoint(path)
    assert extra == {"note": "unit"}
    assert loaded.checksum() == params.checksum()
    for a, b in zip(loaded.arrays, params.arrays):
        np.testing.assert_array_equal(a, b)


def test_truncated_checkpoint_rejected(tmp_path):
    path = tmp_path / "policy.ckpt"
    save_checkpoint(path, init_params(A, hidden=HIDDEN), None)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_param_shape_validation():
    params = init_params(A, hidden=HIDDEN)
    with pytest.raises(ValueError):
        params.replace_arrays(list(params.arrays[:-1]))


def _env(K):
    g = ConflictGraph(3, frozenset({(0, 1), (1, 2)}))
    return LcgEnv(EnvConfig(mode="coloring", K=K, r=K, B=4), g)


def test_learned_policy_outputs_valid_symbols():
    env = _env(A)
    policy = LearnedPolicy(init_params(A, hidden=HIDDEN))
    obs = env.observe()
    actions = policy(env, obs, np.random.default_rng(0))
    assert actions.shape == (3,)
    assert all(0 <= a <= A for a in actions)
    assert policy_forward(obs, policy.params_by_alphabet[A]).shape == (3, A + 1)
    assert isinstance(value_forward(obs, policy.params_by_alphabet[A]), float)


def test_learned_policy_falls_back_on_unknown_alphabet():
    env = _env(A + 1)
    with pytest.raises(ValueError):
        LearnedPolicy(init_params(A, hidden=HIDDEN))(env, env.observe(), np.random.default_rng(0))
    policy = LearnedPolicy(init_params(A, hidden=HIDDEN), fallback=GreedyDeferPolicy(rho=1.0))
    actions = policy(env, env.observe(), np.random.default_rng(0))
    assert actions.tolist() == [1, 2, 1]


def test_random_policy_range():
    env = _env(A)
    actions = RandomPolicy()(env, env.observe(), np.random.default_rng(0))
    assert all(0 <= a <= A for a in actions)


def test_greedy_defer_never_creates_conflicts():
    env = _env(2)
    actions = GreedyDeferPolicy(rho=1.0)(env, env.observe(), np.random.default_rng(0))
    outcome = env.step({v: int(a) for v, a in zip(env.observe().nodes, actions)})
    assert outcome.success
    with pytest.raises(ValueError):
        GreedyDeferPolicy(rho=1.5)


def test_value_doubles_on_two_disjoint_copies():
    features, adjacency = random_graph_inputs(4, k=5)
    params = random_params(4)
    k = features.shape[0]
    single = Observation(tuple(range(k)), adjacency, features)
    zeros = np.zeros_like(adjacency)
    doubled = Observation(
        tuple(range(2 * k)),
        np.block([[adjacency, zeros], [zeros, adjacency]]),
        np.vstack([features, features]),
    )
    assert value_forward(doubled, params) == pytest.approx(2 * value_forward(single, params), rel=1e-9)
    assert value_forward(Observation((), np.zeros((0, 0)), np.zeros((0, input_dim_for(A)))), params) == 0.0
