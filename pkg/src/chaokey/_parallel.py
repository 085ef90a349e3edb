import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "CHAOKEY_THREADS"


def max_workers() -> int:
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn, items, workers=None):
    """Ordered map over ``items``; numba kernels release the GIL so threads scale."""
    items = list(items)
    workers = workers or max_workers()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
