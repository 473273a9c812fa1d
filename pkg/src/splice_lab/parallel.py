"""Order-preserving thread map capped by ``SPLICE_LAB_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
U = TypeVar("U")

ENV_VAR = "SPLICE_LAB_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Worker count: explicit request, else the environment variable, else 1."""
    if requested is not None:
        n = int(requested)
    else:
        raw = os.environ.get(ENV_VAR, "").strip()
        if not raw:
            return 1
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return n


def thread_map(fn: Callable[[T], U], items: Iterable[T], threads: int | None = None) -> list[U]:
    """``[fn(x) for x in items]``, possibly concurrent, results in input order."""
    items = list(items)
    n = min(thread_count(threads), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
