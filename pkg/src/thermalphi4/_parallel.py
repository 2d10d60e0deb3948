"""Order-preserving parallel map over independent grid points."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def pmap(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Map ``func`` over ``items`` keeping input order.

    Each item is evaluated serially by one worker, so results do not depend on
    the thread count.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(func, items))
