"""Deterministic discrete-event queue.

Events execute in non-decreasing timestamp order; equal timestamps are
ordered by (priority class, insertion sequence), so a run is a pure
function of its inputs.
"""

from __future__ import annotations

import heapq
from typing import Callable, List, Tuple

# priority classes for simultaneous events
PRIO_RADIO = 0
PRIO_BEACON = 1
PRIO_GUIDANCE = 2
PRIO_TICK = 3
PRIO_SAMPLE = 4
PRIO_GENERATION = 5


class EventQueue:
    """Binary-heap event queue with a monotonic clock."""

    def __init__(self, start_time: float = 0.0):
        self._heap: List[Tuple[float, int, int, Callable[[], None]]] = []
        self._seq = 0
        self._now = start_time

    def now(self) -> float:
        return self._now

    def schedule(self, time: float, priority: int, callback: Callable[[], None]) -> None:
        if time < self._now - 1e-12:
            raise ValueError(f"cannot schedule event at {time} before now {self._now}")
        heapq.heappush(self._heap, (time, priority, self._seq, callback))
        self._seq += 1

    def schedule_in(self, delay: float, priority: int, callback: Callable[[], None]) -> None:
        self.schedule(self._now + delay, priority, callback)

    def empty(self) -> bool:
        return not self._heap

    def peek_time(self) -> float:
        return self._heap[0][0]

    def run_until(self, end_time: float) -> None:
        """Dispatch every event with timestamp <= end_time."""
        while self._heap and self._heap[0][0] <= end_time:
            time, _, _, callback = heapq.heappop(self._heap)
            if time < self._now - 1e-12:
                raise RuntimeError("event queue went backwards in time")
            self._now = time
            callback()
        self._now = max(self._now, end_time)

    def run_all(self, hard_limit: float = float("inf")) -> None:
        while self._heap and self._heap[0][0] <= hard_limit:
            time, _, _, callback = heapq.heappop(self._heap)
            self._now = time
            callback()
