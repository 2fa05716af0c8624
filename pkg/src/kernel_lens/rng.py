"""Keyed random sub-streams.

Every random draw in the package comes from a Philox generator whose key is
derived from ``(seed, *keys)`` via ``SeedSequence``. Streams are therefore a
function of their key alone, never of the order in which they are consumed,
which is what lets chunks of rows be generated by any number of workers.
"""

from __future__ import annotations

import os

import numpy as np

# Rows of a weight matrix are drawn in fixed blocks of this size, one stream per block.
CHUNK_ROWS = 4096

# First element of every spawn key, so unrelated consumers never share a stream.
WEIGHTS = 0
PAIRS = 1
INPUTS = 2
CELLS = 3

_MASK64 = (1 << 64) - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A fresh 64-bit seed determined by ``(seed, *keys)``."""
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def worker_count(requested: int | None = None) -> int:
    """Number of threads to use; capped by ``KERNEL_LENS_THREADS`` when set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("KERNEL_LENS_THREADS")
    if cap:
        n = min(n, int(cap))
    return max(1, int(n))
