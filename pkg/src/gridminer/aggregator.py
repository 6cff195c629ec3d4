"""Merging partial results and delivering final results to clients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from gridminer.errors import GridError
from gridminer.topology import ClientSpec


class CoverageError(GridError):
    """Partial results do not cover the job's sub-tasks exactly once."""


@dataclass(frozen=True)
class PartialResult:
    task_id: int
    job_id: int
    payload: Any


@dataclass(frozen=True)
class FinalResult:
    job_id: int
    payload: Any
    produced_at: int = 0


@dataclass(frozen=True)
class Delivery:
    client_id: int
    time: int


def aggregate(
    parts: Sequence[PartialResult],
    expected: Iterable[int] | None = None,
    job_id: int | None = None,
    at: int = 0,
) -> FinalResult:
    """Fold partial payloads into one result.

    Payload types provide a ``merge(payloads)`` classmethod; all merges are
    commutative, and parts are folded in task-id order regardless of arrival.
    ``expected`` (task ids) enables the coverage check.
    """
    ids = [p.task_id for p in parts]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise CoverageError(f"duplicate contributions from tasks {dupes}")
    if expected is not None:
        want = set(expected)
        missing = sorted(want - set(ids))
        extra = sorted(set(ids) - want)
        if missing or extra:
            raise CoverageError(f"coverage mismatch: missing tasks {missing}, unexpected tasks {extra}")
    if job_id is None:
        job_id = parts[0].job_id if parts else 0
    if not parts:
        return FinalResult(job_id, None, at)
    ordered = sorted(parts, key=lambda p: p.task_id)
    kinds = {type(p.payload) for p in ordered}
    if len(kinds) != 1:
        raise CoverageError(f"mixed payload kinds: {sorted(k.__name__ for k in kinds)}")
    payload_type = kinds.pop()
    return FinalResult(job_id, payload_type.merge([p.payload for p in ordered]), at)


def multicast(
    result: FinalResult, clients: Sequence[ClientSpec], at: int, sequential: bool = False
) -> list[Delivery]:
    """Delivery schedule for ``result``.

    Multicast sends to every client in the same tick, so completion is
    ``at + max(latency)``. The sequential baseline sends one after another in
    list order, so client *i* receives at ``at`` plus the prefix sum of latencies.
    """
    if not clients:
        raise ValueError("multicast needs at least one client")
    out = []
    elapsed = 0
    for c in clients:
        if sequential:
            elapsed += c.latency
            out.append(Delivery(c.id, at + elapsed))
        else:
            out.append(Delivery(c.id, at + c.latency))
    return out


def completion_time(deliveries: Sequence[Delivery]) -> int:
    return max(d.time for d in deliveries)
