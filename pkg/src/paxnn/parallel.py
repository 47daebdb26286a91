"""Deterministic fan-out over independent training jobs.

Workers are spawned (not forked) so BLAS state is never shared across
processes; results are reassembled in submission order, so the output is
identical for any worker count.
"""

from concurrent.futures import ProcessPoolExecutor
import multiprocessing as mp


def run_jobs(fn, items, jobs: int = 1):
    """Map ``fn`` over ``items``; returns results in input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = mp.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(jobs, len(items)),
                             mp_context=ctx) as pool:
        return list(pool.map(fn, items))
