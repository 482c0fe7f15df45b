"""Counter-based random streams and replicate-parallel execution.

Every replicate owns a Philox generator keyed on ``(seed, replicate index)``
with the stream tag in the top counter word, so the sample set depends only on
the master seed, never on chunking or the number of workers.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ._validation import check_reps, check_seed

# stream tags; one per independent random source
STREAM_GENERIC = 0
STREAM_W_PATH = 10
STREAM_V_POOL = 11
STREAM_C_PATH = 20
STREAM_COND_BM = 30
STREAM_STATIONARY = 31

DEFAULT_CHUNK = 256
#: rough budget of grid values held in memory per block
BLOCK_BUDGET = 2**22


def replicate_generator(seed, index, stream=STREAM_GENERIC):
    """Return the generator owned by replicate ``index`` of ``stream``."""
    key = np.array([check_seed(seed), index], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def replicate_generators(seed, start, stop, stream=STREAM_GENERIC):
    return [replicate_generator(seed, i, stream) for i in range(start, stop)]


def chunk_for(points):
    """Replicates per block for paths of ``points`` grid values."""
    return max(1, min(DEFAULT_CHUNK, BLOCK_BUDGET // max(int(points), 1)))


def run_replicates(func, reps, chunk_size=DEFAULT_CHUNK, workers=1):
    """Evaluate ``func(start, stop)`` over consecutive replicate blocks.

    ``func`` must return an array whose first axis has length ``stop - start``.
    Blocks are concatenated in replicate order, so the output is identical for
    any ``workers``. With ``workers > 1`` ``func`` has to be picklable.
    """
    reps = check_reps(reps)
    chunk_size = max(1, int(chunk_size))
    bounds = [(s, min(s + chunk_size, reps)) for s in range(0, reps, chunk_size)]
    if workers is None or workers <= 1 or len(bounds) == 1:
        parts = [func(s, e) for s, e in bounds]
    else:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            futures = [pool.submit(func, s, e) for s, e in bounds]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=0)
