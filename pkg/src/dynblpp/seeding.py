"""Counter-based seeding: every random stream is keyed by (master, tag, index...)."""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _zigzag(v: int) -> int:
    v = int(v)
    return (v << 1) if v >= 0 else ((-v << 1) - 1)


def tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode("utf8"))


def child_seed_sequence(master: int, tag: str, *index: int) -> np.random.SeedSequence:
    entropy = [int(master) & _MASK64, tag_code(tag)] + [_zigzag(i) for i in index]
    return np.random.SeedSequence(entropy)


def child_seed(master: int, tag: str, *index: int) -> int:
    """A 64-bit integer seed derived from ``(master, tag, *index)``."""
    state = child_seed_sequence(master, tag, *index).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def child_rng(master: int, tag: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(child_seed_sequence(master, tag, *index))
