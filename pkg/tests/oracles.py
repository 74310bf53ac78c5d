"""Independent reference implementations used to check the real ones.

The occupancy oracle scans every second of a window; intervals are plain
(start, end, cores) triples maintained by the test itself, never taken
from the code under test.
"""

from __future__ import annotations


def occupancy_at(intervals, t: int) -> int:
    return sum(c for s, e, c in intervals if s <= t < e)


def brute_max_occupancy(intervals, ws: int, we: int) -> int:
    return max((occupancy_at(intervals, t) for t in range(ws, we)), default=0)


def brute_feasible(intervals, total: int, req: int, ws: int, we: int) -> bool:
    return brute_max_occupancy(intervals, ws, we) + req <= total


def brute_earliest_feasible(intervals, total: int, req: int,
                            earliest: int, latest: int, duration: int):
    """(start, max_occupancy) of the first fitting start, or None."""
    if req > total:
        return None
    for t in range(earliest, latest + 1):
        m = brute_max_occupancy(intervals, t, t + duration)
        if m + req <= total:
            return t, m
    return None


def swf_line(job_id: int, submit: int, wait: int, run: int, procs: int,
             req_walltime: int, status: int = 1) -> str:
    """One SWF data line; unknown fields carry the -1 sentinel."""
    fields = [job_id, submit, wait, run, procs, -1, -1, procs,
              req_walltime, -1, status, 1, 1, 1, 1, 1, -1, 0]
    return " ".join(str(f) for f in fields)
