"""Replicate-level concurrency with results kept in replicate order."""

import logging
import typing
from concurrent.futures import Executor, ThreadPoolExecutor

logger = logging.getLogger(__name__)

_T = typing.TypeVar("_T")


class ReplicateRunner:
    """Run ``fn(0), ..., fn(count - 1)`` serially or on a thread pool.

    An injected ``executor`` is used as is and never shut down by the runner;
    otherwise a ``ThreadPoolExecutor`` is created at startup when ``threads > 1``.
    Results always come back in replicate order, so reductions over them do not
    depend on the thread count.
    """

    def __init__(self, *, threads: int = 1, executor: Executor | None = None) -> None:
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads
        self.executor = executor
        self._owns_executor = False

    def startup(self) -> None:
        if self.executor is None and self.threads > 1:
            self.executor = ThreadPoolExecutor(
                max_workers=self.threads, thread_name_prefix="replicate"
            )
            self._owns_executor = True
        logger.debug("replicate runner startup: done", extra={"threads": self.threads})

    def shutdown(self) -> None:
        if self._owns_executor and self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None
            self._owns_executor = False
        logger.debug("replicate runner shutdown: done")

    def __enter__(self) -> "ReplicateRunner":
        self.startup()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.shutdown()

    def map(self, fn: typing.Callable[[int], _T], count: int) -> list[_T]:
        if self.executor is None:
            return [fn(index) for index in range(count)]
        return list(self.executor.map(fn, range(count)))
