"""Deterministic worker-pool mapping for replications and cross-validation."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence


def available_parallelism() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable, args_list: Sequence, n_jobs: int = 1) -> list:
    """Map preserving order; results are independent of worker scheduling."""
    if n_jobs <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=min(n_jobs, len(args_list))) as pool:
        return list(pool.map(fn, args_list))
