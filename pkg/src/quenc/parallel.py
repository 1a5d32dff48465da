"""Worker-pool helper honoring the QUENC_THREADS cap."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

__all__ = ["worker_count", "parallel_map"]


def worker_count() -> int:
    """Workers to use: QUENC_THREADS when set, else the CPU count."""
    env = os.environ.get("QUENC_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"QUENC_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ValueError("QUENC_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


def parallel_map(fn, items: list) -> list:
    """Order-preserving map over a process pool; serial when one worker.

    Results are collected by input index, so the output is deterministic
    regardless of scheduling.
    """
    items = list(items)
    workers = min(worker_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
