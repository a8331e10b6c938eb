"""
Order-preserving map over independent scan points, optionally across processes.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return workers


def parallel_map(fn, items, workers: int = 1) -> list:
    """
    list(map(fn, items)); with workers > 1 the points run in a process pool.
    fn must be picklable (module-level function or functools.partial of one).
    """
    items = list(items)
    use = min(resolve_workers(workers), len(items)) if items else 1
    if use <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * use))
    logger.debug("mapping %d points over %d workers (chunksize %d)", len(items), use, chunk)
    with ProcessPoolExecutor(max_workers=use) as executor:
        return list(executor.map(fn, items, chunksize=chunk))
