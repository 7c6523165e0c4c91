"""Runtime settings read from the environment."""
from __future__ import annotations

import os

THREADS_ENV = "TORUS_FIELD_THREADS"


def thread_count() -> int:
    """Worker count from ``TORUS_FIELD_THREADS`` (default 1, invalid values -> 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
