"""
Reproducible random streams.

Every consumer of randomness asks for its own stream keyed by purpose, so
adding a new consumer never shifts the numbers another one sees.
"""
import zlib

import numpy as np


def _key_to_int(key):
    if isinstance(key, (int, np.integer)):
        return int(key)
    return zlib.crc32(str(key).encode('utf-8'))


def seed_sequence(seed, *keys):
    """SeedSequence for (seed, *keys); keys may be ints or strings."""
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))


def make_rng(seed, *keys):
    """
    Independent numpy Generator for a seed and an optional purpose path.

    Args:
        seed: Base integer seed of the run
        *keys: Purpose path, e.g. ('init', 'critic1') or ('episode', 17)

    Returns:
        numpy.random.Generator
    """
    return np.random.default_rng(seed_sequence(seed, *keys))


def derive_seed(seed, *keys):
    """Plain 32-bit integer seed derived from (seed, *keys)."""
    return int(seed_sequence(seed, *keys).generate_state(1)[0])
