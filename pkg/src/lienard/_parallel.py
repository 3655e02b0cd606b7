import os
from concurrent.futures import ThreadPoolExecutor


def workers() -> int:
    """Thread cap from ``LIENARD_THREADS``, else the CPU count."""
    env = os.environ.get("LIENARD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def pmap(fn, items):
    """Order-preserving map; threads help because the integrator releases the GIL."""
    items = list(items)
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
