"""Deterministic block-parallel helpers.

Work is cut into fixed-size blocks; block ``b`` of a stream keyed by ``key``
always draws from ``SeedSequence(seed, spawn_key=(*key, b))``, so results do
not depend on how many workers run the blocks.
"""

import numpy as np
from joblib import Parallel, delayed


def block_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def block_sizes(total: int, block_size: int) -> list[int]:
    full, rest = divmod(int(total), int(block_size))
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(fn, args_list, n_jobs=None):
    """Evaluate ``fn(*args)`` for every entry, preserving order."""
    if n_jobs in (None, 1) or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    return Parallel(n_jobs=n_jobs)(delayed(fn)(*args) for args in args_list)
