"""Task allocation by minimum CPU-utilization time among trusted gridlets.

Each gridlet executes its tasks one at a time in arrival order. A task takes
``ceil(cost / cpu_rate)`` ticks; messages between the scheduler and a gridlet
take the gridlet's latency in each direction. Selection compares *projected*
busy time: ticks already spent plus ticks of work assigned but not yet
reported back.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Sequence

from gridminer.errors import InvariantViolation, NoResource
from gridminer.simkernel import Event, Simulator
from gridminer.topology import SCHEDULER_ID, Grid

DEFAULT_TRUST_THRESHOLD = Fraction(1, 4)


@dataclass(frozen=True)
class TrustScore:
    """Beta reputation: (s + 1) / (s + f + 2)."""

    s: int = 0
    f: int = 0

    @property
    def value(self) -> Fraction:
        return Fraction(self.s + 1, self.s + self.f + 2)

    def success(self) -> TrustScore:
        return TrustScore(self.s + 1, self.f)

    def failure(self) -> TrustScore:
        return TrustScore(self.s, self.f + 1)


@dataclass
class GridletStatus:
    gridlet_id: int
    busy_ticks: int = 0
    queue_len: int = 0
    trust: TrustScore = field(default_factory=TrustScore)


def task_duration(cost: int, cpu_rate: int) -> int:
    if cost < 1 or cpu_rate < 1:
        raise ValueError(f"cost and cpu_rate must be >= 1 (got {cost}, {cpu_rate})")
    return -(-cost // cpu_rate)


def select_gridlet(statuses: Sequence[GridletStatus], trust_threshold) -> int:
    """Trusted gridlet with least busy time; ties by queue length, then id."""
    eligible = [s for s in statuses if s.trust.value >= trust_threshold]
    if not eligible:
        raise NoResource(
            "no resource: no gridlets connected" if not statuses
            else f"no resource: all {len(statuses)} gridlets below trust threshold {trust_threshold}"
        )
    return min(eligible, key=lambda s: (s.busy_ticks, s.queue_len, s.gridlet_id)).gridlet_id


class JobState(str, Enum):
    SUBMITTED = "submitted"
    RUNNING = "running"
    AGGREGATING = "aggregating"
    DELIVERED = "delivered"
    FAILED = "failed"


_NEXT_STATE = {
    JobState.SUBMITTED: JobState.RUNNING,
    JobState.RUNNING: JobState.AGGREGATING,
    JobState.AGGREGATING: JobState.DELIVERED,
}


@dataclass
class TaskDescriptor:
    task_id: int
    job_id: int
    partition_id: int
    cost: int
    assigned_gridlet: int | None = None
    duration: int = 0
    outcome: Any = None  # precomputed work result, see work.Outcome
    done: bool = False

    def assign(self, gridlet_id: int) -> None:
        if self.assigned_gridlet is not None:
            raise InvariantViolation(f"task {self.task_id} assigned twice")
        self.assigned_gridlet = gridlet_id


@dataclass
class JobDescriptor:
    job_id: int
    client_id: int
    kind: str
    parameters: dict = field(default_factory=dict)
    sub_tasks: list[TaskDescriptor] = field(default_factory=list)
    state: JobState = JobState.SUBMITTED
    error: str | None = None
    round_tasks: list[int] = field(default_factory=list)
    partials: dict[int, Any] = field(default_factory=dict)

    def advance(self, new: JobState) -> None:
        if new is JobState.FAILED:
            if self.state in (JobState.DELIVERED, JobState.FAILED):
                raise InvariantViolation(f"job {self.job_id}: cannot fail from {self.state.value}")
        elif _NEXT_STATE.get(self.state) is not new:
            raise InvariantViolation(f"job {self.job_id}: illegal transition {self.state.value} -> {new.value}")
        self.state = new

    def fail(self, reason: str) -> None:
        if self.state is not JobState.FAILED:
            self.advance(JobState.FAILED)
            self.error = reason


@dataclass(frozen=True)
class Decision:
    """Snapshot of one selection: the statuses seen and the gridlet chosen."""

    statuses: tuple[GridletStatus, ...]
    threshold: Fraction
    chosen: int


RoundCallback = Callable[[JobDescriptor, dict[int, Any]], None]


class Scheduler:
    """Owns gridlet status, dispatches tasks and tracks them through the kernel.

    ``on_round_complete(job, partials)`` fires once every task of the job's
    current round has reported success. Failures are keyed by
    ``(gridlet_id, ordinal)`` where ordinal counts tasks started on that
    gridlet, from 1.
    """

    def __init__(
        self,
        sim: Simulator,
        grid: Grid,
        trust_threshold=DEFAULT_TRUST_THRESHOLD,
        failures: Sequence[tuple[int, int]] = (),
        on_round_complete: RoundCallback | None = None,
        record_decisions: bool = False,
    ):
        self.sim = sim
        self.grid = grid
        self.trust_threshold = Fraction(trust_threshold)
        self.failures = set(failures)
        self.on_round_complete = on_round_complete
        self.status = {gid: GridletStatus(gid) for gid in sorted(grid.gridlets)}
        self.outstanding = {gid: 0 for gid in grid.gridlets}  # assigned, unreported ticks
        self.assigned = {gid: 0 for gid in grid.gridlets}
        self.started = {gid: 0 for gid in grid.gridlets}
        self.waiting: dict[int, deque[int]] = {gid: deque() for gid in grid.gridlets}
        self.running: dict[int, int | None] = {gid: None for gid in grid.gridlets}
        self.tasks: dict[int, TaskDescriptor] = {}
        self.jobs: dict[int, JobDescriptor] = {}
        self.decisions: list[Decision] | None = [] if record_decisions else None
        self._next_task = 0

    # -- allocation ---------------------------------------------------------

    def projected(self) -> list[GridletStatus]:
        return [
            GridletStatus(gid, st.busy_ticks + self.outstanding[gid], st.queue_len, st.trust)
            for gid, st in self.status.items()
        ]

    def new_task(self, job: JobDescriptor, partition_id: int, cost: int) -> TaskDescriptor:
        task = TaskDescriptor(self._next_task, job.job_id, partition_id, cost)
        self._next_task += 1
        return task

    def dispatch_job(self, job: JobDescriptor, tasks: Sequence[TaskDescriptor]) -> bool:
        """Assign ``tasks`` (the job's next round) in order and send them out.

        Returns False, with the job marked failed and nothing scheduled, when
        some task has no eligible gridlet.
        """
        if job.state not in (JobState.SUBMITTED, JobState.RUNNING):
            raise InvariantViolation(f"job {job.job_id} dispatched in state {job.state.value}")
        self.jobs[job.job_id] = job
        view = {s.gridlet_id: s for s in self.projected()}
        choices = []
        try:
            for task in tasks:
                snapshot = tuple(GridletStatus(**vars(s)) for s in view.values())
                gid = select_gridlet(snapshot, self.trust_threshold)
                if self.decisions is not None:
                    self.decisions.append(Decision(snapshot, self.trust_threshold, gid))
                d = task_duration(task.cost, self.grid.gridlets[gid].cpu_rate)
                view[gid].busy_ticks += d
                view[gid].queue_len += 1
                choices.append((task, gid, d))
        except NoResource as exc:
            job.fail(str(exc))
            return False
        if job.state is JobState.SUBMITTED:
            job.advance(JobState.RUNNING)
        job.round_tasks = [t.task_id for t in tasks]
        job.partials = {}
        now = self.sim.now()
        for task, gid, d in choices:
            task.assign(gid)
            task.duration = d
            job.sub_tasks.append(task)
            self.tasks[task.task_id] = task
            self.outstanding[gid] += d
            self.status[gid].queue_len += 1
            self.assigned[gid] += 1
            self.sim.schedule(now + self.grid.gridlets[gid].latency, gid, "task_start", task.task_id)
        return True

    # -- execution ----------------------------------------------------------

    def handle(self, event: Event) -> bool:
        """Process scheduler-owned events; returns False for other kinds."""
        if event.kind == "task_start":
            self.waiting[event.target].append(event.data)
            if self.running[event.target] is None:
                self._start_next(event.target)
        elif event.kind == "task_finish":
            gid = event.target
            task_id, failed = event.data
            self.running[gid] = None
            latency = self.grid.gridlets[gid].latency
            self.sim.schedule(self.sim.now() + latency, SCHEDULER_ID, "task_report", (task_id, failed))
            self._start_next(gid)
        elif event.kind == "task_report":
            task_id, failed = event.data
            self.on_task_complete(task_id, "failure" if failed else "success", event.time)
        else:
            return False
        return True

    def _start_next(self, gid: int) -> None:
        queue = self.waiting[gid]
        if not queue:
            return
        task = self.tasks[queue.popleft()]
        self.running[gid] = task.task_id
        self.started[gid] += 1
        failed = (gid, self.started[gid]) in self.failures or not task.outcome.ok
        self.sim.schedule(self.sim.now() + task.duration, gid, "task_finish", (task.task_id, failed))

    def on_task_complete(self, task_id: int, outcome: str, at: int) -> None:
        task = self.tasks.get(task_id)
        if task is None:
            raise InvariantViolation(f"completion for unknown task {task_id}")
        if task.done:
            raise InvariantViolation(f"task {task_id} completed twice")
        task.done = True
        gid = task.assigned_gridlet
        st = self.status[gid]
        st.busy_ticks += task.duration
        st.queue_len -= 1
        self.outstanding[gid] -= task.duration
        st.trust = st.trust.success() if outcome == "success" else st.trust.failure()

        job = self.jobs[task.job_id]
        if job.state is JobState.FAILED:
            return
        if outcome != "success":
            reason = task.outcome.error if not task.outcome.ok else "injected failure"
            job.fail(f"task {task_id} failed on gridlet {gid} at t={at}: {reason}")
            return
        job.partials[task_id] = task.outcome.payload
        if len(job.partials) == len(job.round_tasks) and self.on_round_complete is not None:
            self.on_round_complete(job, job.partials)

    # -- reporting ----------------------------------------------------------

    def gridlet_report(self) -> list[dict]:
        return [
            {
                "id": gid,
                "busy_ticks": st.busy_ticks,
                "tasks": self.assigned[gid],
                "trust": {"s": st.trust.s, "f": st.trust.f},
            }
            for gid, st in self.status.items()
        ]
