"""Seeded replica campaigns.

Replica r of a campaign always draws from the same seeds, whatever the worker
or shard count: results are gathered per replica in index order and reduced
afterwards.
"""

import logging
import multiprocessing as mp
from functools import partial

import numpy as np

logger = logging.getLogger(__name__)

PATH_STREAM = 0
SCENERY_STREAM = 1
MAX_PATH_STREAM = 2
MAX_SCENERY_STREAM = 3
BATCH_B_OFFSET = 16
DEFAULT_SHARDS = 8


def derive_seed(master_seed, stream, index):
    """64-bit seed for replica `index` of a stream; distinct streams never collide."""
    seq = np.random.SeedSequence([int(master_seed), int(stream), int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def replica_seeds(master_seed, index, batch=0):
    """(path seed, scenery seed) of a replica."""
    offset = batch * BATCH_B_OFFSET
    return (
        derive_seed(master_seed, PATH_STREAM + offset, index),
        derive_seed(master_seed, SCENERY_STREAM + offset, index),
    )


def shard_bounds(n_replicas, shards):
    shards = max(1, min(int(shards), n_replicas))
    cuts = np.linspace(0, n_replicas, shards + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _run_block(worker, master_seed, start, stop):
    return [worker(r, master_seed) for r in range(start, stop)]


def run_campaign(worker, n_replicas, master_seed, workers=1, shards=DEFAULT_SHARDS):
    """Map worker(r, master_seed) over r = 0..n_replicas-1; results in replica order.

    The worker must be picklable (a module-level function or a partial of one)
    when workers > 1.
    """
    if n_replicas <= 0:
        return []
    blocks = shard_bounds(n_replicas, shards)
    task = partial(_run_block, worker, master_seed)
    logger.info("campaign: %d replicas in %d shards on %d workers", n_replicas, len(blocks), workers)
    if workers <= 1:
        results = [task(a, b) for a, b in blocks]
    else:
        with mp.Pool(processes=workers) as pool:
            results = pool.starmap(task, blocks)
    return [item for block in results for item in block]
