"""End-to-end grid runs: workload in, JSON run report out."""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence, TextIO

from gridminer.aggregator import CoverageError, FinalResult, PartialResult, aggregate, completion_time, multicast
from gridminer.errors import InputError
from gridminer.mining import sequences, tree
from gridminer.query import MatchList, load_mappings, match_lines, parse_query, query_rounds
from gridminer.scheduler import DEFAULT_TRUST_THRESHOLD, JobDescriptor, JobState, Scheduler
from gridminer.simkernel import Event, Simulator
from gridminer.topology import SCHEDULER_ID, Grid, partition_dataset, read_sequences, read_trees, read_tuples
from gridminer.work import Rounds, execute

KINDS = ("mine", "classify", "path_query")


@dataclass
class JobSpec:
    submit: int
    client: int
    kind: str
    params: dict
    recipients: list[int]
    partitions: list = field(default_factory=list, repr=False)
    mappings: list = field(default_factory=list, repr=False)


@dataclass
class Workload:
    jobs: list[JobSpec]
    failures: list[tuple[int, int]] = field(default_factory=list)


def _get(obj: dict, key: str, where: str, kind, default=None, required=False):
    if key not in obj:
        if required:
            raise InputError(f"{where}.{key}: missing")
        return default
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise InputError(f"{where}.{key}: expected integer, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise InputError(f"{where}.{key}: expected string, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise InputError(f"{where}.{key}: expected list, got {value!r}")
    return value


def _rational(value, where: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{where}: expected a number, got {value!r}") from None


def _load_job_data(spec: JobSpec, base: Path, grid: Grid, where: str) -> None:
    hosts = sorted(grid.gridlets)
    p = spec.params["partitions"]
    policy = spec.params["policy"]
    if spec.kind == "mine":
        records = read_sequences(base / _get(spec.params, "data", where, str, required=True))
        spec.partitions = partition_dataset(records, p, policy, hosts)
    elif spec.kind == "classify":
        target = _get(spec.params, "target", where, str, required=True)
        _, records = read_tuples(base / _get(spec.params, "data", where, str, required=True), target)
        spec.partitions = partition_dataset(records, p, policy, hosts)
    else:
        sources = _get(spec.params, "sources", where, list, default=[])
        seen: set[int] = set()
        for src in sources:
            schema, records = read_trees(base / src)
            ids = {r.record_id for r in records}
            if ids & seen or len(ids) != len(records):
                raise InputError(f"{where}.sources: record ids collide in {src}")
            seen |= ids
            parts = partition_dataset(records, p, policy, hosts, schema)
            for part in parts:
                part.id = len(spec.partitions)
                spec.partitions.append(part)
        if "mappings" in spec.params:
            spec.mappings = load_mappings(base / _get(spec.params, "mappings", where, str))


def parse_workload(text: str, grid: Grid, base: Path = Path("."), source: str = "<workload>") -> Workload:
    """Parse and validate a workload, loading every referenced dataset."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{source}: top level must be an object")
    jobs = []
    last = 0
    for i, obj in enumerate(raw.get("jobs", [])):
        where = f"{source}: jobs[{i}]"
        if not isinstance(obj, dict):
            raise InputError(f"{where}: expected object")
        submit = _get(obj, "submit", where, int, default=0)
        if submit < last:
            raise InputError(f"{where}.submit: submit times must be non-decreasing ({submit} < {last})")
        last = submit
        client = _get(obj, "client", where, int, required=True)
        if client not in grid.clients:
            raise InputError(f"{where}.client: unknown client {client}")
        kind = _get(obj, "kind", where, str, required=True)
        if kind not in KINDS:
            raise InputError(f"{where}.kind: expected one of {', '.join(KINDS)}, got {kind!r}")
        recipients = _get(obj, "recipients", where, list, default=[client])
        if not recipients:
            raise InputError(f"{where}.recipients: must name at least one client")
        for r in recipients:
            if r not in grid.clients:
                raise InputError(f"{where}.recipients: unknown client {r!r}")
        params = dict(obj)
        params.setdefault("partitions", max(1, len(grid.gridlets)))
        params.setdefault("policy", "round_robin")
        if _get(params, "partitions", where, int) < 1:
            raise InputError(f"{where}.partitions: must be >= 1")
        spec = JobSpec(submit, client, kind, params, list(recipients))
        _validate_params(spec, where)
        _load_job_data(spec, base, grid, where)
        jobs.append(spec)
    failures = []
    for i, pair in enumerate(raw.get("failures", [])):
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, int) for x in pair)):
            raise InputError(f"{source}: failures[{i}]: expected [gridlet_id, task_ordinal]")
        failures.append((pair[0], pair[1]))
    return Workload(jobs, failures)


def _validate_params(spec: JobSpec, where: str) -> None:
    p = spec.params
    if spec.kind == "mine":
        minsup = _rational(p.get("minsup"), f"{where}.minsup")
        if not 0 < minsup <= 1:
            raise InputError(f"{where}.minsup: must be in (0, 1]")
        prob = p.get("probabilistic")
        if prob is not None:
            rate = _rational(prob.get("sample_rate", "0.5"), f"{where}.probabilistic.sample_rate")
            delta = float(_rational(prob.get("delta", "0.05"), f"{where}.probabilistic.delta"))
            if not 0 < rate <= 1:
                raise InputError(f"{where}.probabilistic.sample_rate: must be in (0, 1]")
            if not 0 < delta < 1:
                raise InputError(f"{where}.probabilistic.delta: must be in (0, 1)")
    elif spec.kind == "classify":
        for key in ("max_depth", "min_records"):
            if _get(p, key, where, int, default=0) < 0:
                raise InputError(f"{where}.{key}: must be >= 0")
    else:
        _get(p, "query", where, str, required=True)
        _get(p, "schema", where, str, required=True)
        parse_query(p["query"], p["schema"])


def load_workload(path: str | Path, grid: Grid) -> Workload:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_workload(text, grid, path.parent, str(path))


def job_rounds(spec: JobSpec, seed: int) -> Rounds:
    p = spec.params
    if spec.kind == "mine":
        prob = p.get("probabilistic")
        if prob is None:
            return sequences.exact_rounds(spec.partitions, _rational(p["minsup"], "minsup"))
        return sequences.probabilistic_rounds(
            spec.partitions,
            _rational(p["minsup"], "minsup"),
            _rational(prob.get("sample_rate", "0.5"), "sample_rate"),
            float(_rational(prob.get("delta", "0.05"), "delta")),
            p.get("seed", seed),
        )
    if spec.kind == "classify":
        return tree.tree_rounds(spec.partitions, p["target"], p.get("max_depth", 4), p.get("min_records", 2))
    q = parse_query(p["query"], p["schema"])
    return query_rounds(q, spec.mappings, spec.partitions)


def result_lines(kind: str, payload: Any) -> list[str]:
    if kind == "mine":
        return [pat.line() for pat in payload]
    if kind == "classify":
        return tree.render(payload)
    return match_lines(payload if payload is not None else MatchList([]))


@dataclass
class _Active:
    spec: JobSpec
    job: JobDescriptor
    rounds: Rounds
    submitted: int
    delivered: int | None = None
    pending_deliveries: int = 0
    result: list[str] | None = None
    skipped: int | None = None


class GridSimulation:
    def __init__(
        self,
        grid: Grid,
        workload: Workload,
        seed: int = 0,
        trust_threshold=DEFAULT_TRUST_THRESHOLD,
        failures: Sequence[tuple[int, int]] = (),
        sequential: bool = False,
        workers: int = 1,
        trace: TextIO | None = None,
        record_decisions: bool = False,
    ):
        self.grid = grid
        self.workload = workload
        self.seed = seed
        self.sequential = sequential
        self.workers = workers
        self.failures = sorted(set(workload.failures) | set(failures))
        self.sim = Simulator(self._handle, trace)
        self.scheduler = Scheduler(
            self.sim, grid, trust_threshold, self.failures, self._round_complete, record_decisions
        )
        self.active: dict[int, _Active] = {}
        self._pool: ProcessPoolExecutor | None = None

    def _map(self, fn, items):
        if self._pool is None or len(items) < 2:
            return list(map(fn, items))
        return list(self._pool.map(fn, items))

    def run(self) -> dict:
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(self.workers)
        try:
            for job_id, spec in enumerate(self.workload.jobs):
                arrive = spec.submit + self.grid.clients[spec.client].latency
                self.sim.schedule(arrive, SCHEDULER_ID, "job_submit", (job_id, spec))
            self.sim.run()
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None
        return self.report()

    # -- event handling -------------------------------------------------------

    def _handle(self, event: Event) -> None:
        if self.scheduler.handle(event):
            return
        if event.kind == "job_submit":
            self._submit(*event.data)
        elif event.kind == "deliver":
            self._deliver(event.data)

    def _submit(self, job_id: int, spec: JobSpec) -> None:
        job = JobDescriptor(job_id, spec.client, spec.kind, spec.params)
        act = _Active(spec, job, job_rounds(spec, self.seed), spec.submit)
        self.active[job_id] = act
        self.scheduler.jobs[job_id] = job
        self._advance(act, None, first=True)

    def _round_complete(self, job: JobDescriptor, partials: dict[int, Any]) -> None:
        act = self.active[job.job_id]
        parts = [PartialResult(tid, job.job_id, payload) for tid, payload in partials.items()]
        try:
            merged = aggregate(parts, expected=job.round_tasks, job_id=job.job_id, at=self.sim.now())
        except CoverageError as exc:
            job.fail(str(exc))
            return
        self._advance(act, merged.payload)

    def _advance(self, act: _Active, merged: Any, first: bool = False) -> None:
        job = act.job
        try:
            batch = next(act.rounds) if first else act.rounds.send(merged)
        except StopIteration as stop:
            self._finish(act, stop.value)
            return
        except InputError as exc:
            job.fail(str(exc))
            return
        tasks = [self.scheduler.new_task(job, w.partition_id, w.cost) for w in batch]
        if not self.scheduler.dispatch_job(job, tasks):
            return
        for task, outcome in zip(tasks, self._map(execute, batch)):
            task.outcome = outcome

    def _finish(self, act: _Active, payload: Any) -> None:
        job = act.job
        if job.state is JobState.SUBMITTED:
            job.advance(JobState.RUNNING)
        job.advance(JobState.AGGREGATING)
        now = self.sim.now()
        result = FinalResult(job.job_id, payload, now)
        act.result = result_lines(job.kind, result.payload)
        if job.kind == "path_query":
            act.skipped = result.payload.skipped if result.payload is not None else 0
        clients = [self.grid.clients[c] for c in act.spec.recipients]
        deliveries = multicast(result, clients, now, self.sequential)
        act.delivered = completion_time(deliveries)
        act.pending_deliveries = len(deliveries)
        for d in deliveries:
            self.sim.schedule(d.time, d.client_id, "deliver", job.job_id)

    def _deliver(self, job_id: int) -> None:
        act = self.active[job_id]
        act.pending_deliveries -= 1
        if act.pending_deliveries == 0:
            act.job.advance(JobState.DELIVERED)

    # -- report ---------------------------------------------------------------

    def report(self) -> dict:
        jobs = []
        for job_id in sorted(self.active):
            act = self.active[job_id]
            ok = act.job.state is JobState.DELIVERED
            jobs.append({
                "job_id": job_id,
                "kind": act.spec.kind,
                "client": act.spec.client,
                "recipients": act.spec.recipients,
                "state": act.job.state.value,
                "submitted": act.submitted,
                "delivered": act.delivered if ok else None,
                "makespan": act.delivered - act.submitted if ok else None,
                "mode": "sequential" if self.sequential else "multicast",
                "tasks": len(act.job.sub_tasks),
                "error": act.job.error,
                "result": act.result if ok else None,
                "skipped": act.skipped,
            })
        return {
            "seed": self.seed,
            "config": {
                "topology": self.grid.to_json(),
                "trust_threshold": str(self.scheduler.trust_threshold),
                "failures": [list(f) for f in self.failures],
                "delivery": "sequential" if self.sequential else "multicast",
            },
            "makespan": self.sim.now(),
            "jobs": jobs,
            "gridlets": self.scheduler.gridlet_report(),
        }


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
