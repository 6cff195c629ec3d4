from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gridminer.errors import InvariantViolation, NoResource
from gridminer.scheduler import (
    GridletStatus,
    JobDescriptor,
    JobState,
    Scheduler,
    TrustScore,
    select_gridlet,
    task_duration,
)
from gridminer.simkernel import Simulator
from gridminer.topology import GridletSpec, Grid
from gridminer.work import Outcome


def statuses(busy, queue=None, trust=None):
    queue = queue or [0] * len(busy)
    trust = trust or [TrustScore()] * len(busy)
    return [GridletStatus(i, b, q, t) for i, (b, q, t) in enumerate(zip(busy, queue, trust))]


def test_min_busy_selected():
    assert select_gridlet(statuses([5, 3, 7]), Fraction(1, 4)) == 1


def test_tie_broken_by_queue_length():
    assert select_gridlet(statuses([4, 4], [2, 1]), Fraction(1, 4)) == 1


def test_tie_broken_by_id():
    assert select_gridlet(statuses([4, 4, 4]), 0) == 0


def test_trust_filter_dominates_busy_time():
    # 0.9 = (8+1)/(8+0+2); 0.1 = (0+1)/(0+8+2)
    st_ = statuses([10, 0], trust=[TrustScore(8, 0), TrustScore(0, 8)])
    assert st_[0].trust.value == Fraction(9, 10) and st_[1].trust.value == Fraction(1, 10)
    assert select_gridlet(st_, Fraction(1, 4)) == 0


def test_no_eligible_gridlet():
    with pytest.raises(NoResource):
        select_gridlet(statuses([0], trust=[TrustScore(0, 5)]), Fraction(1, 4))
    with pytest.raises(NoResource):
        select_gridlet([], Fraction(1, 4))


@pytest.mark.parametrize("cost, rate, ticks", [(8, 4, 2), (9, 4, 3), (1, 100, 1)])
def test_task_duration(cost, rate, ticks):
    assert task_duration(cost, rate) == ticks


def test_trust_updates():
    assert TrustScore().success().value == Fraction(2, 3)
    assert TrustScore().failure().value == Fraction(1, 3)


@given(st.integers(0, 500), st.integers(0, 500))
def test_trust_value_formula(s, f):
    v = TrustScore(s, f).value
    assert 0 < v < 1
    assert v * (s + f + 2) == s + 1


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 5), st.integers(0, 6), st.integers(0, 6)),
                min_size=1, max_size=10),
       st.fractions(0, 1))
def test_select_is_argmin_over_eligible(rows, threshold):
    sts = [GridletStatus(i, b, q, TrustScore(s, f)) for i, (b, q, s, f) in enumerate(rows)]
    eligible = [s for s in sts if s.trust.value >= threshold]
    if not eligible:
        with pytest.raises(NoResource):
            select_gridlet(sts, threshold)
        return
    chosen = sts[select_gridlet(sts, threshold)]
    assert chosen in eligible
    assert all(chosen.busy_ticks <= s.busy_ticks for s in eligible)


def make_scheduler(n, rate=1, latency=0, **kw):
    grid = Grid({i: GridletSpec(i, rate, latency) for i in range(n)})
    sim = Simulator()
    sched = Scheduler(sim, grid, **kw)
    sim.handler = sched.handle
    return sim, sched


def submit(sched, job_id, costs):
    job = JobDescriptor(job_id, 100, "test")
    tasks = [sched.new_task(job, i, c) for i, c in enumerate(costs)]
    ok = sched.dispatch_job(job, tasks)
    for t in tasks:
        t.outcome = Outcome(True, t.task_id)
    return job, tasks, ok


def test_equal_tasks_alternate_on_identical_gridlets():
    sim, sched = make_scheduler(2)
    _, tasks, ok = submit(sched, 0, [3, 3, 3, 3])
    assert ok
    assert [t.assigned_gridlet for t in tasks] == [0, 1, 0, 1]


def test_single_task_single_gridlet():
    sim, sched = make_scheduler(1)
    _, tasks, _ = submit(sched, 0, [5])
    assert tasks[0].assigned_gridlet == 0


def test_untrusted_grid_fails_job_without_events():
    sim, sched = make_scheduler(2, trust_threshold=Fraction(9, 10))
    job, tasks, ok = submit(sched, 0, [1, 1, 1])
    assert not ok and job.state is JobState.FAILED
    assert "no resource" in job.error
    assert sim.pending() == 0


def test_aggregation_at_last_completion():
    rounds = []
    sim, sched = make_scheduler(3, on_round_complete=lambda job, parts: rounds.append((sim.now(), dict(parts))))
    # durations 5, 7, 9 on separate idle gridlets
    job, tasks, _ = submit(sched, 0, [5, 7, 9])
    sim.run()
    assert rounds == [(9, {0: 0, 1: 1, 2: 2})]
    assert [s.busy_ticks for s in sched.status.values()] == [5, 7, 9]


def test_injected_failure_updates_trust_and_fails_job():
    sim, sched = make_scheduler(1, failures=[(0, 2)])
    job, tasks, _ = submit(sched, 0, [1, 1])
    sim.run()
    assert job.state is JobState.FAILED
    assert sched.status[0].trust == TrustScore(1, 1)


def test_unknown_task_completion():
    sim, sched = make_scheduler(1)
    with pytest.raises(InvariantViolation):
        sched.on_task_complete(99, "success", 0)


def test_latency_round_trip():
    rounds = []
    sim, sched = make_scheduler(1, rate=2, latency=3, on_round_complete=lambda j, p: rounds.append(sim.now()))
    submit(sched, 0, [4])
    sim.run()
    # 3 ticks out, 2 ticks of work, 3 ticks back
    assert rounds == [8]


def test_job_state_machine():
    job = JobDescriptor(0, 1, "mine")
    with pytest.raises(InvariantViolation):
        job.advance(JobState.AGGREGATING)
    job.advance(JobState.RUNNING)
    job.advance(JobState.AGGREGATING)
    job.advance(JobState.DELIVERED)
    with pytest.raises(InvariantViolation):
        job.advance(JobState.FAILED)
