"""Ordered fan-out of independent per-frame work."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, TypeVar

from tqdm import tqdm

T = TypeVar("T")


def map_ordered(
    func: Callable[..., T],
    items: Sequence[Any],
    *,
    workers: int = 1,
    progress: bool = False,
    desc: str = "Working",
    unit: str = "item",
) -> list[T]:
    """Apply ``func`` to every item and return results in input order.

    ``func`` and the items must be picklable when ``workers > 1``. Results are
    re-sorted by input index, so the output never depends on scheduling.
    With ``progress`` a tqdm bar counts finished items.
    """

    item_list = list(items)
    worker_count = min(len(item_list), max(workers, 1))
    bar = tqdm(total=len(item_list), desc=desc, unit=unit, disable=not progress)
    try:
        if worker_count <= 1:
            results = []
            for item in item_list:
                results.append(func(item))
                bar.update()
            return results

        indexed_results: list[tuple[int, T]] = []
        with ProcessPoolExecutor(max_workers=worker_count) as pool:
            future_map = {pool.submit(func, item): idx for idx, item in enumerate(item_list)}
            for future in as_completed(future_map):
                idx = future_map[future]
                indexed_results.append((idx, future.result()))
                bar.update()
    finally:
        bar.close()
    indexed_results.sort(key=lambda pair: pair[0])
    return [result for _, result in indexed_results]
