"""
Config Utility
File: utils/utils_config.py

Centralizes configuration: loads environment variables from .env in the
root project folder and builds file paths with pathlib.

Only command-line entry points call these getters. Library code receives
explicit config dataclasses instead of reading the environment.

If you rename any variables in .env, remember to:
- update .env.example
- update the corresponding function in this module.
"""

#####################################
# Imports
#####################################

# import from Python Standard Library
import os
import pathlib

# import from external packages
from dotenv import load_dotenv

# import from local modules
from .utils_logger import logger

#####################################
# Load Environment Variables
#####################################

load_dotenv()

#####################################
# Paths
#####################################


def get_base_data_path() -> pathlib.Path:
    """Fetch BASE_DATA_DIR from environment or use default."""
    project_root = pathlib.Path(__file__).parent.parent
    data_dir = project_root / os.getenv("BASE_DATA_DIR", "data")
    logger.info(f"BASE_DATA_DIR: {data_dir}")
    return data_dir


def get_results_path() -> pathlib.Path:
    """Fetch RESULTS_DIR (under the data folder) from environment or use default."""
    results_dir = get_base_data_path() / os.getenv("RESULTS_DIR", "results")
    logger.info(f"RESULTS_DIR: {results_dir}")
    return results_dir


def get_sqlite_path() -> pathlib.Path:
    """Fetch SQLITE_DB_FILE_NAME from environment or use default."""
    db_path = get_results_path() / os.getenv("SQLITE_DB_FILE_NAME", "experiments.sqlite")
    logger.info(f"SQLITE_PATH: {db_path}")
    return db_path


def get_checkpoint_path() -> pathlib.Path:
    """Fetch CHECKPOINT_FILE_NAME from environment or use default."""
    ckpt = get_base_data_path() / os.getenv("CHECKPOINT_FILE_NAME", "lcg_policy.ckpt")
    logger.info(f"CHECKPOINT_PATH: {ckpt}")
    return ckpt


#####################################
# Learn-to-defer environment
#####################################


def get_episode_budget() -> int:
    """Fetch EPISODE_BUDGET (B, max iterations per episode) or use default."""
    budget = int(os.getenv("EPISODE_BUDGET", 32))
    logger.info(f"EPISODE_BUDGET: {budget}")
    return budget


def get_cleanup_alpha() -> float:
    """Fetch CLEANUP_ALPHA (clean-up-II cutoff fraction of B) or use default."""
    alpha = float(os.getenv("CLEANUP_ALPHA", 0.5))
    logger.info(f"CLEANUP_ALPHA: {alpha}")
    return alpha


def get_early_reward_beta() -> float:
    """Fetch EARLY_REWARD_BETA (weight of the early-termination reward) or use default."""
    beta = float(os.getenv("EARLY_REWARD_BETA", 0.5))
    logger.info(f"EARLY_REWARD_BETA: {beta}")
    return beta


#####################################
# Training
#####################################


def get_ppo_iterations() -> int:
    """Fetch PPO_ITERATIONS or use default."""
    iterations = int(os.getenv("PPO_ITERATIONS", 1000))
    logger.info(f"PPO_ITERATIONS: {iterations}")
    return iterations


def get_learning_rate() -> float:
    """Fetch LEARNING_RATE or use default."""
    lr = float(os.getenv("LEARNING_RATE", 0.001))
    logger.info(f"LEARNING_RATE: {lr}")
    return lr


def get_grad_clip_norm() -> float:
    """Fetch GRAD_CLIP_NORM or use default."""
    clip = float(os.getenv("GRAD_CLIP_NORM", 0.2))
    logger.info(f"GRAD_CLIP_NORM: {clip}")
    return clip


def get_rollout_parallelism() -> int:
    """Fetch ROLLOUT_PARALLELISM (episodes per PPO iteration) or use default."""
    n_parallel = int(os.getenv("ROLLOUT_PARALLELISM", 20))
    logger.info(f"ROLLOUT_PARALLELISM: {n_parallel}")
    return n_parallel


def get_hidden_dim() -> int:
    """Fetch HIDDEN_DIM (graph-convolution width) or use default."""
    hidden = int(os.getenv("HIDDEN_DIM", 128))
    logger.info(f"HIDDEN_DIM: {hidden}")
    return hidden


def get_best_of_n() -> int:
    """Fetch BEST_OF_N (evaluation episodes per instance) or use default."""
    n = int(os.getenv("BEST_OF_N", 20))
    logger.info(f"BEST_OF_N: {n}")
    return n


#####################################
# Classical baselines
#####################################


def get_exact_budget() -> int:
    """Fetch EXACT_BUDGET (branch-and-bound node expansions) or use default."""
    budget = int(os.getenv("EXACT_BUDGET", 2_000_000))
    logger.info(f"EXACT_BUDGET: {budget}")
    return budget


def get_tabucol_iters() -> int:
    """Fetch TABUCOL_ITERS or use default."""
    iters = int(os.getenv("TABUCOL_ITERS", 1000))
    logger.info(f"TABUCOL_ITERS: {iters}")
    return iters


def get_tabucol_tenure() -> int:
    """Fetch TABUCOL_TENURE or use default."""
    tenure = int(os.getenv("TABUCOL_TENURE", 7))
    logger.info(f"TABUCOL_TENURE: {tenure}")
    return tenure


def get_default_seed() -> int:
    """Fetch DEFAULT_SEED or use default."""
    seed = int(os.getenv("DEFAULT_SEED", 20240601))
    logger.info(f"DEFAULT_SEED: {seed}")
    return seed


#####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    # Test the configuration functions
    logger.info("Testing configuration.")
    try:
        get_base_data_path()
        get_results_path()
        get_sqlite_path()
        get_checkpoint_path()
        get_episode_budget()
        get_cleanup_alpha()
        get_early_reward_beta()
        get_ppo_iterations()
        get_learning_rate()
        get_grad_clip_norm()
        get_rollout_parallelism()
        get_hidden_dim()
        get_best_of_n()
        get_exact_budget()
        get_tabucol_iters()
        get_tabucol_tenure()
        get_default_seed()
        logger.info("SUCCESS: Configuration function tests complete.")

    except Exception as e:
        logger.error(f"ERROR: Configuration function test failed: {e}")
