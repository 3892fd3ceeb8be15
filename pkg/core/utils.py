import logging
import os
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings

logger = logging.getLogger(__name__)


def worker_count() -> int:
    """
    Number of worker threads for file ingestion and batch prediction.
    WCS_THREADS caps it; otherwise os.cpu_count() is used.
    """
    cpus = os.cpu_count() or 1
    raw = settings.WCS_THREADS
    if not raw:
        return cpus
    try:
        cap = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer WCS_THREADS={raw!r}")
        return cpus
    return max(1, min(cap, cpus))


def map_ordered(func, items, workers=None):
    """Apply func to every item on a thread pool; results follow input order."""
    items = list(items)
    workers = workers or worker_count()
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
