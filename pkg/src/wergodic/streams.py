"""Reproducible random substreams and block-parallel evaluation.

Trajectories are simulated in fixed-size blocks.  Block ``b`` of a run keyed
by ``seed`` draws from its own generator, spawned from
``SeedSequence(seed, spawn_key=(tag, b))``, and every step draws noise for the
full block even when only part of it is used.  Trajectory ``i`` therefore
depends only on ``(seed, i)``: not on the total count requested, not on the
order in which blocks run and not on the number of workers.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1024
WORKERS_ENV = "WERGODIC_WORKERS"

# spawn-key tags keeping unrelated uses of one seed apart
NOISE = 0
INIT = 1
BOOTSTRAP = 2
REFERENCE = 3


def generator(seed, *key):
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed, *key):
    """Derive an independent integer seed for a nested computation."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def n_blocks(n):
    return -(-int(n) // BLOCK)


def block_slices(n):
    return [(b, b * BLOCK, min(n, (b + 1) * BLOCK)) for b in range(n_blocks(n))]


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_blocks(fn, items, workers=None):
    """Evaluate ``fn`` on each item, returning results in item order."""
    items = list(items)
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
