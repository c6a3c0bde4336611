"""Order-preserving map over a process pool.

Results always come back in input order, so parallel runs produce the same
tables and reports as serial ones.
"""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Apply ``func`` to every item, in worker processes when jobs > 1.

    Args:
        func: Top-level (picklable) function
        items: Inputs
        jobs: Number of worker processes; 1 runs serially in-process

    Returns:
        Results in input order

    Raises:
        ValueError: If jobs < 1
    """
    if jobs < 1:
        msg = f"jobs must be at least 1, got {jobs}"
        raise ValueError(msg)
    work = list(items)
    if jobs == 1 or len(work) <= 1:
        return [func(item) for item in work]
    logger.debug("Dispatching %d tasks to %d workers", len(work), jobs)
    with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
        return list(pool.map(func, work))
