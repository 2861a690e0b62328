import threading
import time
from concurrent.futures import ThreadPoolExecutor

import pytest
from lp_ball_limits.runner import ReplicateRunner
from lp_ball_limits.trackers import WallTimeTracker


def test_serial_runner_keeps_order() -> None:
    with ReplicateRunner() as runner:
        assert runner.executor is None
        assert runner.map(lambda index: index * index, 5) == [0, 1, 4, 9, 16]


def test_threaded_runner_keeps_order() -> None:
    def slow_square(index: int) -> int:
        time.sleep(0.001 * (10 - index))
        return index * index

    with ReplicateRunner(threads=4) as runner:
        assert runner.executor is not None
        assert runner.map(slow_square, 10) == [index * index for index in range(10)]
    assert runner.executor is None


def test_threaded_runner_uses_several_threads() -> None:
    barrier = threading.Barrier(2, timeout=5)

    def wait(index: int) -> int:
        barrier.wait()
        return index

    with ReplicateRunner(threads=2) as runner:
        assert runner.map(wait, 2) == [0, 1]


def test_injected_executor_is_not_shut_down() -> None:
    with ThreadPoolExecutor(max_workers=2) as executor:
        with ReplicateRunner(executor=executor) as runner:
            assert runner.map(str, 3) == ["0", "1", "2"]
        assert runner.executor is executor
        assert executor.submit(int, "7").result() == 7


def test_rejects_non_positive_threads() -> None:
    with pytest.raises(ValueError):
        ReplicateRunner(threads=0)


def test_wall_time_tracker_records_seconds() -> None:
    state: dict[str, float] = {}
    with WallTimeTracker(state, "wall_time"):
        time.sleep(0.05)
    assert 0.04 <= state["wall_time"] < 5.0


def test_wall_time_tracker_records_on_error() -> None:
    state: dict[str, float] = {}
    with pytest.raises(RuntimeError), WallTimeTracker(state, "elapsed"):
        raise RuntimeError("boom")
    assert state["elapsed"] >= 0.0
