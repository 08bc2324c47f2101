import logging
import concurrent.futures
from typing import Callable, List, Optional, Sequence, TypeVar, Any

from config import resolve_max_workers

logger = logging.getLogger(__name__)

T = TypeVar("T")


def map_ordered(fn: Callable[[Any], T], tasks: Sequence[Any], max_workers: Optional[int] = None,
                label: str = "task") -> List[T]:
    """
    Runs fn over tasks in a thread pool and returns results in task order.
    The first failing task re-raises after the pool shuts down.
    """
    if not tasks:
        return []

    workers = min(resolve_max_workers(max_workers), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]

    results: List[Optional[T]] = [None] * len(tasks)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers, thread_name_prefix=label) as executor:
        # Map future to task index
        futures = {executor.submit(fn, t): i for i, t in enumerate(tasks)}

        for future in concurrent.futures.as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(f"{label} {index} failed: {e}")
                for pending in futures:
                    pending.cancel()
                raise

    return results  # type: ignore[return-value]
