"""
utils_seeding.py - the single sub-seed splitting rule.

Every command takes one root seed. Anything that needs its own stream
(an instance, an episode, a PPO iteration) derives it here from the root
and a fixed tuple of integer keys, so reruns are byte-identical.
"""

#####################################
# Import Modules
#####################################

import numpy as np

SEED_MASK = 0x7FFFFFFFFFFFFFFF

#####################################
# Seed Derivation
#####################################


def derive_seed(root: int, *keys: int) -> int:
    """Return a non-negative 63-bit sub-seed for (root, *keys); fits a signed SQLite INTEGER."""
    # keys go in spawn_key: plain entropy is zero-padded, so (root,) and (root, 0) would collide
    seq = np.random.SeedSequence(int(root) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, np.uint64)[0]) & SEED_MASK


def make_rng(root: int, *keys: int) -> np.random.Generator:
    """Return a numpy Generator seeded by derive_seed(root, *keys)."""
    return np.random.default_rng(derive_seed(root, *keys))
