"""Deterministic random streams and block-parallel replication.

Replicates are grouped into fixed-size blocks. Block ``b`` of a run seeded
with ``seed`` always draws from ``PCG64(SeedSequence(seed, spawn_key=(b,)))``
no matter how many worker threads execute the blocks, and results are
concatenated in block order. Changing ``threads`` therefore never changes a
result.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

DEFAULT_BLOCK = 2048
THREADS_ENV = "POISSON_STEIN_THREADS"


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def map_blocks(fn: Callable[[np.random.Generator, int], np.ndarray], reps: int, seed: int,
               threads: Optional[int] = None, block: int = DEFAULT_BLOCK) -> np.ndarray:
    """Run ``fn(rng, count)`` over blocks covering ``reps`` replicates.

    ``fn`` returns an array whose first axis has length ``count``; the block
    outputs are concatenated along that axis.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    sizes = [min(block, reps - start) for start in range(0, reps, block)]

    def run(b: int) -> np.ndarray:
        return np.asarray(fn(block_rng(seed, b), sizes[b]))

    workers = resolve_threads(threads)
    if workers == 1 or len(sizes) == 1:
        parts = [run(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return np.concatenate(parts, axis=0)
