"""Worker pool for batch evaluation.

Jobs sit in a shared thread-safe queue and are consumed by a fixed pool
of worker threads; results are written into per-index slots so the output
order matches submission order no matter how many workers run or in what
order they finish.
"""
from __future__ import annotations

import queue
import threading
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class EvaluationJob:
    """One unit of work: dense submission index, test input, seed."""

    index: int
    test_input: object
    seed: int


def evaluate_pool(jobs: list[EvaluationJob], evaluate: Callable,
                  workers: int = 1) -> list:
    """Evaluate all jobs with ``workers`` threads, preserving order.

    A job whose ``evaluate`` call raises gets its exception stored at its
    slot instead of a result; remaining jobs are still processed.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    indices = [job.index for job in jobs]
    if sorted(indices) != list(range(len(jobs))):
        raise ValueError("job indices must be dense and unique")
    results: list = [None] * len(jobs)
    if not jobs:
        return results

    q: queue.Queue = queue.Queue()
    for job in jobs:
        q.put(job)

    def work():
        while True:
            try:
                job = q.get_nowait()
            except queue.Empty:
                return
            try:
                results[job.index] = evaluate(job)
            except Exception as exc:
                results[job.index] = exc
            finally:
                q.task_done()

    threads = [threading.Thread(target=work, name=f"eval-worker-{i}")
               for i in range(min(workers, len(jobs)))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return results
