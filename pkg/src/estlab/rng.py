"""Deterministic RNG streams.

Every random draw in the package comes from a generator derived from an
integer seed plus a string label. Separate labels give independent streams,
so e.g. data generation, weight init, and epoch shuffling never share state
and toggling one feature cannot perturb another. Hashing goes through
sha256 (not Python's salted hash) so streams are stable across processes.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    """64-bit child seed from (seed, label), stable across runs and hosts."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one concern (e.g. "init", "shuffle")."""
    return np.random.default_rng(derive_seed(seed, label))
