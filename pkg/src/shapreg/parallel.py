"""Deterministic fan-out helper for independent tasks (folds, repeats, grid points)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def map_ordered(fn, items, jobs: int = 1) -> list:
    """Apply ``fn`` to each item, preserving input order in the result.

    With jobs > 1 the work runs on a thread pool; results are still collected
    in input order, so output never depends on scheduling.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
