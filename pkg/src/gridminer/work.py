"""Round-based job drivers.

Every job kind is written as a generator that yields one *round* at a time (a
list of :class:`Work` items, one per sub-task) and receives back the merged
payload of that round. The simulator runs the same generators with timing and
scheduling; :func:`drive` runs them straight through for standalone use.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generator, Iterable, Iterator

from gridminer.aggregator import PartialResult, aggregate
from gridminer.errors import TaskError

Rounds = Generator[list["Work"], Any, Any]
Mapper = Callable[[Callable, Iterable], Iterator]


@dataclass(frozen=True)
class Work:
    partition_id: int
    cost: int
    fn: Callable[..., Any]
    args: tuple

    def __post_init__(self):
        if self.cost < 1:
            raise ValueError(f"task cost must be >= 1, got {self.cost}")


@dataclass(frozen=True)
class Outcome:
    ok: bool
    payload: Any = None
    error: str = ""


def execute(work: Work) -> Outcome:
    try:
        return Outcome(True, work.fn(*work.args))
    except TaskError as exc:
        return Outcome(False, error=str(exc))


def drive(rounds: Rounds, mapper: Mapper = map) -> Any:
    """Run a round generator to completion without simulated time."""
    try:
        batch = next(rounds)
        while True:
            outcomes = list(mapper(execute, batch))
            for out in outcomes:
                if not out.ok:
                    raise TaskError(out.error)
            parts = [PartialResult(i, 0, out.payload) for i, out in enumerate(outcomes)]
            merged = aggregate(parts, expected=range(len(batch))).payload
            batch = rounds.send(merged)
    except StopIteration as stop:
        return stop.value
