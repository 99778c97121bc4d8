"""Order-preserving parallel map used by the parameter sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_WORKERS = "GGAMES_WORKERS"


def default_workers() -> int:
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn, items, workers=None):
    """``[fn(x) for x in items]``, optionally spread over worker processes.

    Results come back in input order, so the output never depends on the
    worker count or on scheduling.
    """
    items = list(items)
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
