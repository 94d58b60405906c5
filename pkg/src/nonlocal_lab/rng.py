"""Seeded random streams.

Every stream is derived from one root seed plus a tuple of non-negative
integer counters (trial index, setting pair, block number, ...). Streams
built from the same ``(seed, counters)`` are bit-identical no matter which
thread or in which order they are created, which is what keeps parallel
runs reproducible.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 1997
# samples are drawn in fixed-size blocks, each block from its own stream
BLOCK_SIZE = 1 << 16


def derive_stream(seed: int, *counters: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    if any(c < 0 for c in counters):
        raise ValueError(f"stream counters must be non-negative, got {counters}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(c) for c in counters))
    return np.random.Generator(np.random.PCG64(ss))


def block_layout(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split ``n`` draws into ``(block_index, length)`` pieces."""
    blocks = []
    start = 0
    index = 0
    while start < n:
        length = min(block_size, n - start)
        blocks.append((index, length))
        start += length
        index += 1
    return blocks
