"""Thread-pool map that preserves input order.

Results are returned in the order of the inputs regardless of scheduling, so
callers that reduce with order-independent or exactly-rounded sums (math.fsum)
produce bit-identical output for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], threads: int = 1
) -> list[R]:
    """Map fn over items with a thread pool; output order == input order."""
    seq: Sequence[T] = list(items)
    if threads < 1:
        raise ValueError(f"threads = {threads} must be >= 1")
    if threads == 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seq))
