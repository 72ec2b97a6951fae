"""Bounded parallel map over independent per-target work items."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "ELASTICA_THREADS"


def thread_cap() -> int:
    """Fan-out cap from the environment; defaults to serial execution."""
    raw = os.environ.get(ENV_THREADS, "")
    try:
        cap = int(raw)
    except ValueError:
        return 1
    return max(1, cap)


def parallel_map(fn, items):
    """Apply ``fn`` over ``items`` preserving order; threads per the env cap."""
    items = list(items)
    cap = min(thread_cap(), len(items)) if items else 1
    if cap <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))
