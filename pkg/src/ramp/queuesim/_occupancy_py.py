"""Pure-Python occupancy kernel.

Reference implementation of the interval sweep used for load snapshots and
earliest-feasible-start searches. The compiled twin in _occupancy_cy.pyx
implements exactly the same contract; ramp.queuesim.occupancy picks one at
import time.

All arrays are int64 and describe the same interval set twice: sorted by
start (starts, cores_by_start) and sorted by end (ends, cores_by_end).
Times are integral log-seconds. An interval [s, e) occupies its cores for
s <= t < e.
"""

from __future__ import annotations

from collections import deque

_INF = 1 << 62


def max_occupancy(starts, cores_by_start, ends, cores_by_end, ws, we):
    """Maximum occupied cores over the window [ws, we); 0 for empty windows."""
    n = len(starts)
    if ws >= we:
        return 0
    occ = 0
    i = j = 0
    # establish occupancy at ws
    while i < n and starts[i] <= ws:
        occ += cores_by_start[i]
        i += 1
    while j < n and ends[j] <= ws:
        occ -= cores_by_end[j]
        j += 1
    best = occ
    # sweep events inside (ws, we); ends before starts at equal times
    while True:
        ts = starts[i] if i < n else _INF
        te = ends[j] if j < n else _INF
        if te <= ts:
            if te >= we:
                break
            occ -= cores_by_end[j]
            j += 1
        else:
            if ts >= we:
                break
            occ += cores_by_start[i]
            i += 1
        if occ > best:
            best = occ
    return int(best)


def earliest_feasible(starts, cores_by_start, ends, cores_by_end,
                      total, req, earliest, latest, duration):
    """First start in [earliest, latest] whose window [t, t+duration) keeps
    occupancy + req within total. Returns (start, max_occupancy_at_start),
    or (-1, -1) when no start fits."""
    if req > total or latest < earliest:
        return (-1, -1)
    n = len(starts)
    free_max = total - req
    cap = latest + duration

    occ = 0
    i = j = 0
    while i < n and starts[i] <= earliest:
        occ += cores_by_start[i]
        i += 1
    while j < n and ends[j] <= earliest:
        occ -= cores_by_end[j]
        j += 1

    # piecewise-constant occupancy: segment k is [T[k], T[k+1]) at O[k]
    T = [earliest]
    O = [occ]
    while True:
        ts = starts[i] if i < n else _INF
        te = ends[j] if j < n else _INF
        t = ts if ts <= te else te
        if t >= cap:
            break
        while i < n and starts[i] == t:
            occ += cores_by_start[i]
            i += 1
        while j < n and ends[j] == t:
            occ -= cores_by_end[j]
            j += 1
        T.append(t)
        O.append(occ)
    m = len(O)
    T.append(cap)

    # candidates: earliest, then every boundary crossing of either window
    # edge; sliding-window max via a monotonic deque of segment indices.
    dq: deque = deque()
    add = 0
    ci = 1      # next boundary for the left edge
    cj = 1      # next boundary for the right edge (shifted by duration)
    cand = earliest
    while True:
        right = cand + duration
        while add < m and T[add] < right:
            while dq and O[dq[-1]] <= O[add]:
                dq.pop()
            dq.append(add)
            add += 1
        while dq and T[dq[0] + 1] <= cand:
            dq.popleft()
        best = O[dq[0]]
        if best <= free_max:
            return (int(cand), int(best))
        while ci < m and T[ci] <= cand:
            ci += 1
        while cj <= m and T[cj] - duration <= cand:
            cj += 1
        a = T[ci] if ci < m else _INF
        b = T[cj] - duration if cj <= m else _INF
        cand = a if a <= b else b
        if cand > latest or cand >= _INF:
            return (-1, -1)
