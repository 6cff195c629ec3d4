"""Integer-tick discrete-event kernel.

Events are dispatched in lexicographic ``(time, seq)`` order where ``seq`` is
the global issue counter, so simultaneous events run FIFO and every run with
the same inputs replays identically.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, TextIO

from gridminer.errors import InvariantViolation

Handler = Callable[["Event"], None]


@dataclass(frozen=True, order=True)
class Event:
    time: int
    seq: int
    target: Any = field(compare=False)
    kind: str = field(compare=False)
    data: Any = field(default=None, compare=False)

    def trace_line(self) -> str:
        return f"tick={self.time} seq={self.seq} target={self.target} kind={self.kind}"


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[Event] = []

    def push(self, event: Event) -> None:
        heapq.heappush(self._heap, event)

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek(self) -> Event | None:
        return self._heap[0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


class Simulator:
    """Virtual clock plus event queue.

    ``handler`` receives every dispatched event. Handlers may schedule new
    events but must not call :meth:`run_until` themselves.
    """

    def __init__(self, handler: Handler | None = None, trace: TextIO | None = None):
        self._queue = EventQueue()
        self._clock = 0
        self._seq = 0
        self._running = False
        self.handler = handler
        self.trace = trace
        self.dispatched = 0

    def now(self) -> int:
        return self._clock

    def schedule(self, time: int, target: Any, kind: str, data: Any = None) -> Event:
        if time < self._clock:
            raise InvariantViolation(
                f"event {kind!r} for {target} scheduled at t={time} before now={self._clock}"
            )
        event = Event(time, self._seq, target, kind, data)
        self._seq += 1
        self._queue.push(event)
        return event

    def pending(self) -> int:
        return len(self._queue)

    def run_until(self, horizon: int) -> int:
        if self._running:
            raise InvariantViolation("run_until re-entered from an event handler")
        self._running = True
        try:
            while True:
                head = self._queue.peek()
                if head is None or head.time > horizon:
                    break
                event = self._queue.pop()
                self._clock = event.time
                self.dispatched += 1
                if self.trace is not None:
                    self.trace.write(event.trace_line() + "\n")
                if self.handler is not None:
                    self.handler(event)
        finally:
            self._running = False
        return self._clock

    def run(self) -> int:
        """Drain the queue completely."""
        while self._queue.peek() is not None:
            self.run_until(self._queue.peek().time)
        return self._clock
