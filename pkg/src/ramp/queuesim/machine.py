"""Machine availability model: replayed log + advance reservations.

The machine replays an SWF log against a simulated clock and overlays
reservations. Occupancy is computed over integral log-seconds with the
compiled (or fallback) kernel; feasibility covers the whole requested
window so later instants can never be oversubscribed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import occupancy
from .swf import SwfLog


class ReservationState(str, Enum):
    TENTATIVE = "tentative"
    HELD = "held"
    CONFIRMED = "confirmed"
    CANCELLED = "cancelled"
    EXPIRED = "expired"


# states that occupy cores
_LIVE = (ReservationState.TENTATIVE, ReservationState.HELD, ReservationState.CONFIRMED)

_TRANSITIONS = {
    ReservationState.TENTATIVE: {ReservationState.HELD, ReservationState.CANCELLED, ReservationState.EXPIRED},
    ReservationState.HELD: {ReservationState.CONFIRMED, ReservationState.CANCELLED},
    ReservationState.CONFIRMED: {ReservationState.CANCELLED},
    ReservationState.CANCELLED: set(),
    ReservationState.EXPIRED: set(),
}


class ReservationUnknown(KeyError):
    pass


class ReservationRefused(RuntimeError):
    """Requested slot is not feasible at placement time."""


class TransitionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimClock:
    """Maps wall-clock time onto a position in the replayed log."""

    system_start: float
    log_offset: int = 0

    def __post_init__(self):
        if self.log_offset < 0:
            raise ValueError("log_offset must be >= 0")

    def log_time(self, wall_now: float) -> float:
        if wall_now < self.system_start:
            raise ValueError("wall_now precedes system_start")
        return (wall_now - self.system_start) + self.log_offset

    def wall_time(self, log_t: float) -> float:
        return self.system_start + (log_t - self.log_offset)


@dataclass
class ReservationRecord:
    reservation_id: str
    cores: int
    start: int
    duration: int
    state: ReservationState = ReservationState.TENTATIVE
    hold_deadline: Optional[float] = None

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class LoadResult:
    feasible: bool
    load: float
    occupied: int


@dataclass
class MachineModel:
    total_cores: int
    log: SwfLog = field(default_factory=lambda: SwfLog((), ()))
    clock: SimClock = field(default_factory=lambda: SimClock(system_start=0.0))
    name: str = "machine"

    def __post_init__(self):
        if self.total_cores <= 0:
            raise ValueError("total_cores must be positive")
        self._log_intervals: list[tuple[int, int, int]] = []
        for job in self.log.jobs:
            dur = job.occupancy_duration
            cores = job.occupancy_cores
            if dur is None or cores is None:
                continue
            self._log_intervals.append((job.start, job.start + dur, cores))
        self.reservations: dict[str, ReservationRecord] = {}
        self._counter = 0
        self._dirty = True
        self._arrays: tuple = ()

    # --- occupancy arrays ---

    def _intervals(self) -> tuple:
        if self._dirty:
            ivals = list(self._log_intervals)
            for r in self.reservations.values():
                if r.state in _LIVE:
                    ivals.append((r.start, r.end, r.cores))
            if ivals:
                starts = np.array([iv[0] for iv in ivals], dtype=np.int64)
                ends = np.array([iv[1] for iv in ivals], dtype=np.int64)
                cores = np.array([iv[2] for iv in ivals], dtype=np.int64)
                by_start = np.argsort(starts, kind="stable")
                by_end = np.argsort(ends, kind="stable")
                self._arrays = (
                    np.ascontiguousarray(starts[by_start]),
                    np.ascontiguousarray(cores[by_start]),
                    np.ascontiguousarray(ends[by_end]),
                    np.ascontiguousarray(cores[by_end]),
                )
            else:
                empty = np.zeros(0, dtype=np.int64)
                self._arrays = (empty, empty, empty, empty)
            self._dirty = False
        return self._arrays

    # --- queries ---

    def max_occupancy(self, ws: int, we: int) -> int:
        starts, cs, ends, ce = self._intervals()
        return occupancy.max_occupancy(starts, cs, ends, ce, int(ws), int(we))

    def snapshot_load(self, at: float, cores: int, duration: int) -> LoadResult:
        """Feasibility and load fraction for `cores` over [at, at+duration)."""
        if cores < 1:
            raise ValueError("cores must be >= 1")
        if duration <= 0:
            raise ValueError("duration must be positive")
        ws = math.floor(at)
        occupied = self.max_occupancy(ws, ws + int(duration))
        feasible = occupied + cores <= self.total_cores
        return LoadResult(feasible=feasible, load=occupied / self.total_cores, occupied=occupied)

    def earliest_feasible_start(self, earliest: float, latest: float, cores: int,
                                duration: int) -> Optional[tuple[int, LoadResult]]:
        """First integral log-second in [earliest, latest] where the window
        fits, with the load snapshot at that start; None when nothing fits."""
        if cores < 1 or duration <= 0:
            raise ValueError("cores >= 1 and duration > 0 required")
        lo = math.ceil(earliest)
        hi = math.floor(latest)
        starts, cs, ends, ce = self._intervals()
        t, occupied = occupancy.earliest_feasible(
            starts, cs, ends, ce, self.total_cores, cores, lo, hi, int(duration))
        if t < 0:
            return None
        result = LoadResult(feasible=True, load=occupied / self.total_cores, occupied=int(occupied))
        return int(t), result

    # --- reservations ---

    def place_reservation(self, at: float, cores: int, duration: int,
                          hold_deadline: Optional[float] = None) -> str:
        snap = self.snapshot_load(at, cores, duration)
        if not snap.feasible:
            raise ReservationRefused(
                f"{self.name}: {cores} cores not available at {at} for {duration}s")
        self._counter += 1
        rid = f"{self.name}-r{self._counter}"
        self.reservations[rid] = ReservationRecord(
            reservation_id=rid,
            cores=cores,
            start=math.floor(at),
            duration=int(duration),
            hold_deadline=hold_deadline,
        )
        self._dirty = True
        return rid

    def _get(self, reservation_id: str) -> ReservationRecord:
        try:
            return self.reservations[reservation_id]
        except KeyError:
            raise ReservationUnknown(reservation_id) from None

    def _transition(self, reservation_id: str, to: ReservationState) -> ReservationRecord:
        rec = self._get(reservation_id)
        if to not in _TRANSITIONS[rec.state]:
            raise TransitionError(f"{reservation_id}: {rec.state.value} -> {to.value} not allowed")
        rec.state = to
        self._dirty = True
        return rec

    def cancel_reservation(self, reservation_id: str) -> ReservationRecord:
        """Cancel a live reservation; cancelling a dead one is a no-op."""
        rec = self._get(reservation_id)
        if rec.state in (ReservationState.CANCELLED, ReservationState.EXPIRED):
            return rec
        return self._transition(reservation_id, ReservationState.CANCELLED)

    def mark_held(self, reservation_id: str) -> ReservationRecord:
        rec = self._transition(reservation_id, ReservationState.HELD)
        rec.hold_deadline = None
        return rec

    def confirm_reservation(self, reservation_id: str) -> ReservationRecord:
        return self._transition(reservation_id, ReservationState.CONFIRMED)

    def expire_reservation(self, reservation_id: str) -> ReservationRecord:
        return self._transition(reservation_id, ReservationState.EXPIRED)

    def live_reservations(self) -> list[ReservationRecord]:
        return [r for r in self.reservations.values() if r.state in _LIVE]

    def assert_capacity_safe(self) -> int:
        """Highest occupancy anywhere on the horizon; raises if oversubscribed."""
        starts, _, ends, _ = self._intervals()
        if len(starts) == 0:
            return 0
        peak = self.max_occupancy(int(starts[0]), int(ends[-1]) + 1)
        if peak > self.total_cores:
            raise AssertionError(f"{self.name}: occupancy {peak} exceeds {self.total_cores}")
        return peak
