"""Thread-count configuration and deterministic chunked execution."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigurationError

THREADS_ENV = "GEOFINLAB_THREADS"


def thread_count(override: int | None = None) -> int:
    """Worker count from ``override`` or the ``GEOFINLAB_THREADS`` variable (default 1)."""
    if override is not None:
        value = override
    else:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigurationError(f"thread count must be positive, got {value}")
    return value


def split_range(n: int, parts: int):
    """Contiguous ``(start, stop)`` blocks covering ``range(n)``."""
    parts = max(1, min(parts, n)) if n else 1
    base, extra = divmod(n, parts)
    out, start = [], 0
    for i in range(parts):
        stop = start + base + (1 if i < extra else 0)
        out.append((start, stop))
        start = stop
    return out


def map_blocks(fn, n: int, threads: int | None = None, block: int | None = None):
    """Apply ``fn(start, stop)`` over blocks of ``range(n)`` and return the
    results in block order, so output never depends on scheduling."""
    workers = thread_count(threads)
    nblocks = workers if block is None else max(1, -(-n // block))
    blocks = split_range(n, nblocks)
    if workers == 1 or len(blocks) == 1:
        return [fn(a, b) for a, b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), blocks))
