import logging
import os
from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm

from pyGOAT.exceptions import ConfigError

logger = logging.getLogger(__name__)


def thread_count(requested=None):
    """Worker threads: explicit request, else GOAT_THREADS, else the CPU count."""
    if requested:
        return max(int(requested), 1)
    env = os.environ.get('GOAT_THREADS')
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise ConfigError(f"GOAT_THREADS must be an integer, got '{env}'")
    return os.cpu_count() or 1


def parallel_map(function, items, threads=None, desc=None):
    """
    Apply `function` to every item on a thread pool; results keep input order.

    Exceptions raised by `function` propagate to the caller.  A `desc`
    shows a progress bar under that label.
    """
    items = list(items)
    workers = min(thread_count(threads), max(len(items), 1))
    progress = tqdm(total=len(items), desc=desc, disable=desc is None)
    try:
        if workers == 1:
            results = []
            for item in items:
                results.append(function(item))
                progress.update()
            return results
        logger.debug("mapping %d items over %d threads", len(items), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = []
            for result in pool.map(function, items):
                results.append(result)
                progress.update()
            return results
    finally:
        progress.close()
