"""
Deterministic execution of independent work items.

Items are mapped serially, or on a process pool when more than one worker is
requested; either way results come back in item order, so anything folded
from them does not depend on the worker count.
"""

import logging
import os
from concurrent.futures import as_completed, ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

from click import ClickException
from vmodule import VLOG_1

LOG = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "BLAB_THREADS"


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        return int(value)
    except ValueError:
        raise ClickException(f"{THREADS_ENV} must be an integer, got {value!r}") from None


class Runner:
    def __init__(self, threads: Optional[int] = None) -> None:
        if threads is None:
            threads = default_threads()
        if threads < 1:
            raise ClickException(f"threads must be positive, got {threads}")
        self.threads = threads

    def __repr__(self) -> str:
        return f"Runner(threads={self.threads})"

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """
        ``[fn(x) for x in items]``; ``fn`` and the items must pickle when more
        than one worker is used.
        """
        if self.threads == 1 or len(items) <= 1:
            results = []
            for i, item in enumerate(items):
                LOG.log(VLOG_1, "Running item %d of %d", i + 1, len(items))
                results.append(fn(item))
            return results

        slots: List[Optional[R]] = [None] * len(items)
        workers = min(self.threads, len(items))
        LOG.info("Running %d items on %d workers", len(items), workers)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = {ex.submit(fn, item): i for i, item in enumerate(items)}
            for fut in as_completed(futures):
                i = futures[fut]
                slots[i] = fut.result()
                LOG.log(VLOG_1, "Finished item %d of %d", i + 1, len(items))
        return slots  # type: ignore[return-value]

    def first(
        self, fn: Callable[[T], Optional[R]], items: Sequence[T]
    ) -> Optional[Tuple[int, R]]:
        """
        The lowest-indexed item whose result is not None, with that result.
        """
        if self.threads == 1:
            for i, item in enumerate(items):
                result = fn(item)
                if result is not None:
                    return i, result
            return None
        for i, result in enumerate(self.map(fn, items)):
            if result is not None:
                return i, result
        return None
