"""Order-preserving work queue over independent tasks."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import multiprocessing as mp
from typing import Callable, Sequence


def run_tasks(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """Apply fn to every task; results come back in task order.

    Each task must carry its own substream index so the output does not
    depend on scheduling or on the number of workers.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    try:
        ctx = mp.get_context("fork")
    except ValueError:
        ctx = mp.get_context()
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
        return list(pool.map(fn, tasks))
