import pathlib

import pytest

import utils.utils_config as config

ENV_KEYS = [
    "BASE_DATA_DIR",
    "RESULTS_DIR",
    "SQLITE_DB_FILE_NAME",
    "CHECKPOINT_FILE_NAME",
    "EPISODE_BUDGET",
    "CLEANUP_ALPHA",
    "EARLY_REWARD_BETA",
    "PPO_ITERATIONS",
    "BEST_OF_N",
    "EXACT_BUDGET",
    "DEFAULT_SEED",
]


@pytest.fixture
def clean_env(monkeypatch):
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    return monkeypatch


def test_defaults(clean_env):
    root = pathlib.Path(config.__file__).parent.parent
    assert config.get_base_data_path() == root / "data"
    assert config.get_sqlite_path() == root / "data" / "results" / "experiments.sqlite"
    assert config.get_checkpoint_path().name == "lcg_policy.ckpt"
    assert config.get_episode_budget() == 32
    assert config.get_cleanup_alpha() == 0.5
    assert config.get_early_reward_beta() == 0.5
    assert config.get_best_of_n() == 20


def test_environment_overrides(clean_env, tmp_path):
    clean_env.setenv("BASE_DATA_DIR", str(tmp_path))
    clean_env.setenv("RESULTS_DIR", "out")
    clean_env.setenv("SQLITE_DB_FILE_NAME", "x.sqlite")
    clean_env.setenv("EPISODE_BUDGET", "8")
    clean_env.setenv("CLEANUP_ALPHA", "0.25")
    clean_env.setenv("DEFAULT_SEED", "42")
    assert config.get_sqlite_path() == tmp_path / "out" / "x.sqlite"
    assert config.get_episode_budget() == 8
    assert config.get_cleanup_alpha() == 0.25
    assert config.get_default_seed() == 42


def test_bad_value_raises(clean_env):
    clean_env.setenv("EXACT_BUDGET", "lots")
    with pytest.raises(ValueError):
        config.get_exact_budget()
