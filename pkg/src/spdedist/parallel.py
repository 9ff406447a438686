"""Thread pool helpers with deterministic, order-preserving results."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "SPDEDIST_THREADS"


def resolve_threads(threads=None) -> int:
    """Explicit value, else ``$SPDEDIST_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def map_ordered(fn, items, threads=None):
    """``[fn(x) for x in items]``, optionally on a thread pool."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def blocks(n, size):
    """Half-open ranges covering ``range(n)`` in chunks of ``size``."""
    return [(a, min(a + size, n)) for a in range(0, n, size)]
