"""Order-preserving fan-out of independent, seeded work items."""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

from ..config import get_settings

_LOGGER = logging.getLogger(__name__)


def chunk_ranges(count: int, chunk: int) -> list[range]:
    """Split ``range(count)`` into consecutive ranges of at most ``chunk`` items."""
    return [range(start, min(start + chunk, count)) for start in range(0, count, chunk)]


def map_ordered[T, R](
    fn: Callable[[T], R], items: Sequence[T], threads: int | None = None
) -> list[R]:
    """Apply ``fn`` to every item, possibly on worker threads, returning results in input order.

    Every item must carry its own seed so the aggregate does not depend on scheduling.
    """
    workers = threads if threads is not None else get_settings().threads
    workers = max(1, min(workers, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    _LOGGER.debug("Fanning %d work items out to %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
