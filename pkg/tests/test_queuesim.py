"""Queue simulation: SWF io, clock mapping, occupancy, reservations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramp.queuesim import (
    MachineModel,
    ReservationRefused,
    ReservationState,
    ReservationUnknown,
    SimClock,
    SwfParseError,
    TransitionError,
    parse_swf,
    serialize_swf,
)
from ramp.queuesim import _occupancy_py
from ramp.queuesim import occupancy as kernel

from .oracles import (
    brute_earliest_feasible,
    brute_max_occupancy,
    swf_line,
)


# --- SWF io ---

def test_parse_two_jobs():
    text = swf_line(1, 0, 0, 100, 4, 100) + "\n" + swf_line(2, 10, 0, 100, 4, 100) + "\n"
    log = parse_swf(text)
    assert [j.job_id for j in log.jobs] == [1, 2]


def test_parse_wrong_arity():
    with pytest.raises(SwfParseError) as err:
        parse_swf("1 2 3\n")
    assert "line 1" in str(err.value)


def test_parse_17_fields():
    line = " ".join(swf_line(1, 0, 0, 10, 1, 10).split()[:17])
    with pytest.raises(SwfParseError):
        parse_swf(line)


def test_parse_non_numeric():
    bad = swf_line(1, 0, 0, 10, 1, 10).replace("10", "ten", 1)
    with pytest.raises(SwfParseError):
        parse_swf(bad)


def test_roundtrip_preserves_comments_and_fields():
    text = "; Version: 2.2\n; Computer: test\n" + swf_line(7, 5, 1, 9, 2, 12) + "\n"
    log = parse_swf(text)
    again = parse_swf(serialize_swf(log))
    assert again == log
    assert again.comments == ("; Version: 2.2", "; Computer: test")


def test_parse_sorts_by_submit_time():
    text = swf_line(2, 50, 0, 1, 1, 1) + "\n" + swf_line(1, 10, 0, 1, 1, 1) + "\n"
    log = parse_swf(text)
    assert [j.submit_time for j in log.jobs] == [10, 50]


def test_sentinel_fallbacks():
    job = parse_swf(swf_line(1, 0, 0, 300, 4, -1)).jobs[0]
    assert job.occupancy_duration == 300  # walltime -1 falls back to run_time
    both = parse_swf(swf_line(1, 0, 0, -1, 4, -1)).jobs[0]
    assert both.occupancy_duration is None  # excluded entirely


# --- SimClock ---

def test_log_time_origin():
    clock = SimClock(system_start=1000.0, log_offset=0)
    assert clock.log_time(1000.0) == 0


def test_log_time_with_offset():
    clock = SimClock(system_start=1000.0, log_offset=3370000)
    assert clock.log_time(1060.0) == 3370060


def test_log_time_before_start():
    clock = SimClock(system_start=1000.0)
    with pytest.raises(ValueError):
        clock.log_time(999.0)


def test_wall_time_inverts_log_time():
    clock = SimClock(system_start=500.0, log_offset=50000)
    assert clock.wall_time(clock.log_time(777.0)) == 777.0


# --- snapshot_load spec examples ---

def two_job_machine() -> MachineModel:
    text = swf_line(1, 0, 0, 100, 4, 100) + "\n" + swf_line(2, 10, 0, 100, 4, 100) + "\n"
    return MachineModel(total_cores=8, log=parse_swf(text))


def test_snapshot_overlap_window_infeasible():
    snap = two_job_machine().snapshot_load(at=50, cores=2, duration=10)
    assert snap.feasible is False
    assert snap.load == 1.0


def test_snapshot_after_jobs_feasible():
    snap = two_job_machine().snapshot_load(at=150, cores=2, duration=10)
    assert snap.feasible is True
    assert snap.load == 0.0


def test_snapshot_empty_log():
    m = MachineModel(total_cores=4)
    snap = m.snapshot_load(at=0, cores=4, duration=100)
    assert snap.feasible and snap.load == 0.0


def test_snapshot_oversized_request():
    m = MachineModel(total_cores=4)
    snap = m.snapshot_load(at=0, cores=5, duration=10)
    assert snap.feasible is False


# --- reservations ---

def test_reserve_consumes_capacity():
    m = MachineModel(total_cores=8)
    m.place_reservation(at=100, cores=8, duration=100)
    snap = m.snapshot_load(at=150, cores=1, duration=1)
    assert snap.feasible is False
    assert snap.load == 1.0


def test_two_reservations_then_full():
    m = MachineModel(total_cores=8)
    m.place_reservation(at=0, cores=4, duration=100)
    m.place_reservation(at=0, cores=4, duration=100)
    with pytest.raises(ReservationRefused):
        m.place_reservation(at=0, cores=1, duration=10)


def test_cancel_restores_snapshot():
    m = MachineModel(total_cores=8)
    before = m.snapshot_load(at=0, cores=8, duration=50)
    rid = m.place_reservation(at=0, cores=8, duration=50)
    m.cancel_reservation(rid)
    assert m.snapshot_load(at=0, cores=8, duration=50) == before


def test_cancel_unknown():
    with pytest.raises(ReservationUnknown):
        MachineModel(total_cores=8).cancel_reservation("nope")


def test_cancel_idempotent():
    m = MachineModel(total_cores=8)
    rid = m.place_reservation(at=0, cores=1, duration=10)
    m.cancel_reservation(rid)
    rec = m.cancel_reservation(rid)
    assert rec.state is ReservationState.CANCELLED


def test_lifecycle_transitions():
    m = MachineModel(total_cores=8)
    rid = m.place_reservation(at=0, cores=1, duration=10)
    assert m.reservations[rid].state is ReservationState.TENTATIVE
    m.mark_held(rid)
    m.confirm_reservation(rid)
    assert m.reservations[rid].state is ReservationState.CONFIRMED
    m.cancel_reservation(rid)

    rid2 = m.place_reservation(at=0, cores=1, duration=10)
    m.expire_reservation(rid2)
    with pytest.raises(TransitionError):
        m.mark_held(rid2)


def test_confirm_requires_held():
    m = MachineModel(total_cores=8)
    rid = m.place_reservation(at=0, cores=1, duration=10)
    with pytest.raises(TransitionError):
        m.confirm_reservation(rid)


def test_reservation_ids_deterministic():
    def run():
        m = MachineModel(total_cores=8, name="atlas1")
        ids = [m.place_reservation(at=i * 10, cores=2, duration=5) for i in range(3)]
        return ids

    assert run() == run() == ["atlas1-r1", "atlas1-r2", "atlas1-r3"]


# --- kernel equivalence: compiled vs pure vs brute force ---

@st.composite
def interval_sets(draw):
    n = draw(st.integers(0, 40))
    intervals = []
    for _ in range(n):
        s = draw(st.integers(0, 300))
        d = draw(st.integers(1, 80))
        c = draw(st.integers(1, 16))
        intervals.append((s, s + d, c))
    return intervals


def as_arrays(intervals):
    if not intervals:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, empty
    starts = np.array([s for s, _, _ in intervals], dtype=np.int64)
    ends = np.array([e for _, e, _ in intervals], dtype=np.int64)
    cores = np.array([c for _, _, c in intervals], dtype=np.int64)
    bs, be = np.argsort(starts, kind="stable"), np.argsort(ends, kind="stable")
    return (np.ascontiguousarray(starts[bs]), np.ascontiguousarray(cores[bs]),
            np.ascontiguousarray(ends[be]), np.ascontiguousarray(cores[be]))


@settings(max_examples=200, deadline=None)
@given(interval_sets(), st.integers(0, 350), st.integers(1, 60))
def test_max_occupancy_matches_oracle_and_twin(intervals, ws, dur):
    arrays = as_arrays(intervals)
    we = ws + dur
    expected = brute_max_occupancy(intervals, ws, we)
    assert kernel.max_occupancy(*arrays, ws, we) == expected
    assert _occupancy_py.max_occupancy(*arrays, ws, we) == expected


@settings(max_examples=200, deadline=None)
@given(interval_sets(), st.integers(1, 64), st.integers(1, 16),
       st.integers(0, 300), st.integers(0, 120), st.integers(1, 50))
def test_earliest_feasible_matches_oracle_and_twin(intervals, total, req, earliest, span, dur):
    latest = earliest + span
    arrays = as_arrays(intervals)
    expected = brute_earliest_feasible(intervals, total, req, earliest, latest, dur)
    got_cy = kernel.earliest_feasible(*arrays, total, req, earliest, latest, dur)
    got_py = _occupancy_py.earliest_feasible(*arrays, total, req, earliest, latest, dur)
    want = (-1, -1) if expected is None else expected
    assert tuple(got_cy) == tuple(want)
    assert tuple(got_py) == tuple(want)


# --- machine vs oracle over interleaved place/cancel sequences ---

@settings(max_examples=60, deadline=None)
@given(st.data())
def test_machine_matches_oracle_under_interleaving(data):
    total = data.draw(st.integers(1, 64), label="total_cores")
    n_jobs = data.draw(st.integers(0, 30), label="jobs")
    lines = []
    intervals = []
    for k in range(n_jobs):
        submit = data.draw(st.integers(0, 200), label=f"submit{k}")
        wait = data.draw(st.integers(0, 50), label=f"wait{k}")
        dur = data.draw(st.integers(1, 60), label=f"dur{k}")
        cores = data.draw(st.integers(1, total), label=f"cores{k}")
        start = submit + wait
        # real logs never oversubscribe their own machine; keep ours honest
        if brute_max_occupancy(intervals, start, start + dur) + cores <= total:
            lines.append(swf_line(k + 1, submit, wait, 0, cores, dur))
            intervals.append((start, start + dur, cores))
    machine = MachineModel(total_cores=total, log=parse_swf("\n".join(lines) + "\n") if lines else parse_swf(""))

    live: dict[str, tuple[int, int, int]] = {}
    for step in range(data.draw(st.integers(1, 15), label="steps")):
        action = data.draw(st.sampled_from(["place", "cancel", "query"]), label=f"act{step}")
        if action == "place":
            at = data.draw(st.integers(0, 300), label=f"at{step}")
            cores = data.draw(st.integers(1, total), label=f"c{step}")
            dur = data.draw(st.integers(1, 60), label=f"d{step}")
            feasible = brute_max_occupancy(intervals + list(live.values()), at, at + dur) + cores <= total
            if feasible:
                rid = machine.place_reservation(at=at, cores=cores, duration=dur)
                live[rid] = (at, at + dur, cores)
            else:
                with pytest.raises(ReservationRefused):
                    machine.place_reservation(at=at, cores=cores, duration=dur)
        elif action == "cancel" and live:
            rid = data.draw(st.sampled_from(sorted(live)), label=f"rid{step}")
            machine.cancel_reservation(rid)
            del live[rid]
        else:
            at = data.draw(st.integers(0, 320), label=f"qat{step}")
            cores = data.draw(st.integers(1, total), label=f"qc{step}")
            dur = data.draw(st.integers(1, 60), label=f"qd{step}")
            snap = machine.snapshot_load(at=at, cores=cores, duration=dur)
            occ = brute_max_occupancy(intervals + list(live.values()), at, at + dur)
            assert snap.occupied == occ
            assert snap.feasible == (occ + cores <= total)
            assert abs(snap.load - occ / total) < 1e-9
        # capacity safety after every step
        machine.assert_capacity_safe()
