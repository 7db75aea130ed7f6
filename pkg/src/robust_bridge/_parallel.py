"""Worker-count policy shared by sweeps and simulation."""

from __future__ import annotations

import os

ENV_VAR = "ROBUST_BRIDGE_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Resolve a worker count: explicit request, else the env var, else 1.

    ``0`` (from either source) means one worker per CPU. The env var also caps
    explicit requests.
    """
    cpus = os.cpu_count() or 1
    env = os.environ.get(ENV_VAR, "").strip()
    cap = None
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {env!r}") from None
        if cap < 0:
            raise ValueError(f"{ENV_VAR} must be >= 0, got {cap}")
        cap = cap or cpus
    n = requested if requested is not None else (cap or 1)
    if n == 0:
        n = cpus
    if cap is not None:
        n = min(n, cap)
    return max(1, int(n))
