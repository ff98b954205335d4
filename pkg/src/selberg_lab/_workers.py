import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "SELBERG_LAB_THREADS"


def worker_count():
    cap = os.environ.get(ENV_THREADS)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def chunk_bounds(n, chunk):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def run_chunks(fn, n, chunk):
    """Apply ``fn(lo, hi)`` over fixed-size index ranges.

    Chunk boundaries depend only on ``n`` and ``chunk`` so results are the
    same for any worker count; outputs come back in index order.
    """
    bounds = chunk_bounds(n, chunk)
    workers = worker_count()
    if workers == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
