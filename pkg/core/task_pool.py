# core/task_pool.py
# Fan-out kerja CPU ke thread (asyncio.to_thread + Semaphore), urutan hasil tetap.

import asyncio
import os
from typing import Callable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(requested: int, n_items: int) -> int:
    """0 = jumlah item, dibatasi jumlah CPU."""
    if requested and requested > 0:
        return requested
    return max(1, min(n_items, os.cpu_count() or 1))


async def _gather_limited(fn: Callable[[T], R], items: Sequence[T], concurrency: int) -> List[R]:
    sem = asyncio.Semaphore(concurrency)

    async def _one(item: T) -> R:
        async with sem:
            return await asyncio.to_thread(fn, item)

    # gather menjaga urutan input -> reduksi deterministik
    return await asyncio.gather(*(_one(item) for item in items))


def run_parallel(fn: Callable[[T], R], items: Sequence[T], concurrency: int = 1) -> List[R]:
    items = list(items)
    if concurrency <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return asyncio.run(_gather_limited(fn, items, concurrency))
