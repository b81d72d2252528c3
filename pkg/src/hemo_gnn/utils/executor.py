"""Order-preserving parallel map over thread or process pools.

Simulations and rollouts are independent per trajectory, so they can be
fanned out. Results always come back in input order, which keeps
parallel runs byte-identical to sequential ones.
"""

import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

from hemo_gnn.utils.constants import ENV_WORKERS

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = min(32, (os.cpu_count() or 1) + 4)


def resolve_workers(workers: Optional[int]) -> int:
    """Resolve a worker count, honouring the HEMO_GNN_WORKERS override."""
    if workers is None:
        env_value = os.getenv(ENV_WORKERS)
        if env_value:
            try:
                workers = int(env_value)
            except ValueError:
                logger.warning(f"Ignoring non-integer {ENV_WORKERS}={env_value!r}")
    if workers is None:
        return 1
    return max(1, workers)


def parallel_map(
    fn: Callable[[Any], Any],
    items: Iterable[Any],
    workers: Optional[int] = None,
    processes: bool = False,
) -> List[Any]:
    """Apply fn to every item, in parallel when workers > 1.

    Args:
        fn: Callable applied to each item (must be picklable when processes=True)
        items: Inputs
        workers: Number of workers; 1 (or None without override) runs inline
        processes: Use a process pool instead of threads for CPU-bound work

    Returns:
        List of results in the same order as items
    """
    items = list(items)
    workers = resolve_workers(workers)

    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    pool_cls: type[Executor] = ProcessPoolExecutor if processes else ThreadPoolExecutor
    workers = min(workers, len(items))
    logger.info(f"Running {len(items)} tasks on {workers} {'processes' if processes else 'threads'}")
    with pool_cls(max_workers=workers) as pool:
        return list(pool.map(fn, items))
