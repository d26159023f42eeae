"""Deterministic discrete-event core.

A single integer-nanosecond clock and a priority queue of callbacks.
Events fire in (time, sequence) order, so two events never tie: same-time
events run in the order they were scheduled.  All randomness elsewhere in
the simulator is seeded, and nothing here consults wall-clock time, so a
run is a pure function of its inputs.
"""

from __future__ import annotations

from heapq import heappop, heappush
from typing import Any, Callable, Optional

from .errors import SimulationError

SimTime = int  # nanoseconds since simulation start


class EventHandle:
    """Returned by :meth:`EventLoop.schedule`; allows cancellation."""

    __slots__ = ("fire_at", "seq", "_cancelled")

    def __init__(self, fire_at: int, seq: int):
        self.fire_at = fire_at
        self.seq = seq
        self._cancelled = False

    def cancel(self) -> None:
        self._cancelled = True

    @property
    def cancelled(self) -> bool:
        return self._cancelled


class EventLoop:
    """Ordered callback queue with a monotonically advancing clock."""

    def __init__(self, trace: bool = False):
        self._heap: list[tuple[int, int, EventHandle, Callable, Any]] = []
        self._now: int = 0
        self._seq: int = 0
        self.trace_enabled = trace
        self.trace: list[tuple[int, int, str]] = []

    def now(self) -> SimTime:
        return self._now

    def schedule(
        self, delay: int, action: Callable, arg: Any = None, label: str = ""
    ) -> EventHandle:
        """Schedule ``action(time, arg)`` to fire ``delay`` ns from now."""
        if delay < 0:
            raise ValueError(f"cannot schedule into the past (delay={delay})")
        fire_at = self._now + delay
        handle = EventHandle(fire_at, self._seq)
        heappush(self._heap, (fire_at, self._seq, handle, action, arg))
        self._seq += 1
        if self.trace_enabled:
            self.trace.append((fire_at, handle.seq, label or getattr(action, "__name__", "?")))
        return handle

    def peek_next_time(self) -> Optional[SimTime]:
        """Fire time of the earliest pending event, or None when idle."""
        heap = self._heap
        while heap and heap[0][2].cancelled:
            heappop(heap)
        return heap[0][0] if heap else None

    def advance_to(self, t: int) -> None:
        """Move the clock forward without executing anything (co-simulation)."""
        if t < self._now:
            raise SimulationError(f"clock would move backwards: {t} < {self._now}")
        self._now = t

    def run_due(self) -> int:
        """Execute every event scheduled at or before the current clock."""
        count = 0
        heap = self._heap
        while heap and heap[0][0] <= self._now:
            fire_at, _seq, handle, action, arg = heappop(heap)
            if handle.cancelled:
                continue
            if fire_at < self._now:
                raise SimulationError(
                    f"event at t={fire_at} fired after clock reached {self._now}"
                )
            action(fire_at, arg)
            count += 1
        return count

    def run_until_idle(self) -> SimTime:
        """Execute events in order until none remain; returns the final clock."""
        heap = self._heap
        while heap:
            fire_at, _seq, handle, action, arg = heappop(heap)
            if handle.cancelled:
                continue
            if fire_at < self._now:
                raise SimulationError(
                    f"event at t={fire_at} is in the past (now={self._now})"
                )
            self._now = fire_at
            action(fire_at, arg)
        return self._now

    def run_until(self, t: int) -> SimTime:
        """Execute events with fire time <= t, then set the clock to t."""
        heap = self._heap
        while heap and heap[0][0] <= t:
            fire_at, _seq, handle, action, arg = heappop(heap)
            if handle.cancelled:
                continue
            if fire_at < self._now:
                raise SimulationError(
                    f"event at t={fire_at} is in the past (now={self._now})"
                )
            self._now = fire_at
            action(fire_at, arg)
        if t > self._now:
            self._now = t
        return self._now

    @property
    def pending(self) -> int:
        return sum(1 for e in self._heap if not e[2].cancelled)
