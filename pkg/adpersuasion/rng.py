"""
Seed derivation for reproducible pipelines.

The master seed fans out into named substreams (population, instances, noise,
split, search, ...). Each stream key is hashed into the SeedSequence spawn key,
so adding a new stream never shifts the draws of an existing one.
"""
import hashlib
from typing import Tuple

import numpy as np


def _stream_words(name: str) -> Tuple[int, ...]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def seed_sequence(master_seed: int, stream: str, *index: int) -> np.random.SeedSequence:
    """
    Build the SeedSequence for a named stream, optionally indexed.

    Args:
        master_seed: Experiment master seed
        stream: Stream name, e.g. "population" or "noise"
        index: Extra integers (auction id, fold number) for per-item substreams

    Returns:
        A SeedSequence independent of every other (stream, index) pair
    """
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    return np.random.SeedSequence(entropy=master_seed,
                                  spawn_key=_stream_words(stream) + tuple(int(i) for i in index))


def substream(master_seed: int, stream: str, *index: int) -> np.random.Generator:
    """Return a fresh PCG64 generator for the given stream key."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, stream, *index)))


def derive_seed(master_seed: int, stream: str, *index: int) -> int:
    """Derive a plain 32-bit integer seed, for components that take an int."""
    return int(seed_sequence(master_seed, stream, *index).generate_state(1, dtype=np.uint32)[0])
