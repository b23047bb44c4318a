"""Helpers used by the test-suite and benchmarks."""
from __future__ import annotations

import tracemalloc
from typing import Callable


def peak_allocation(fn: Callable[[], object], repeat: int = 10, warmup: int = 2) -> int:
    """Peak traced memory (bytes) allocated while calling ``fn`` ``repeat`` times.

    NumPy reports its data buffers to :mod:`tracemalloc`, so any array
    temporary shows up here.  Small Python bookkeeping objects (views,
    bound methods) account for a few hundred bytes at most.
    """
    for _ in range(warmup):
        fn()
    was_tracing = tracemalloc.is_tracing()
    if not was_tracing:
        tracemalloc.start()
    try:
        tracemalloc.reset_peak()
        base = tracemalloc.get_traced_memory()[0]
        for _ in range(repeat):
            fn()
        return tracemalloc.get_traced_memory()[1] - base
    finally:
        if not was_tracing:
            tracemalloc.stop()
