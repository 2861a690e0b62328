import time
import typing


class WallTimeTracker:
    """Measure seconds between enter and exit and record them in state."""

    def __init__(self, state: typing.MutableMapping[str, typing.Any], key: str) -> None:
        self.start_ns = 0
        self.state = state
        self.key = key

    def __enter__(self) -> "WallTimeTracker":
        self.start_ns = time.perf_counter_ns()
        return self

    def __exit__(self, exc_type, exc_value, exc_tb) -> None:
        self._record_time(self.key, time.perf_counter_ns())

    def _record_time(self, key: str, end_ns: int) -> None:
        self.state[key] = (end_ns - self.start_ns) / 1e9
