# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled occupancy kernel; contract identical to _occupancy_py."""

from libc.stdlib cimport free, malloc

cdef long long INF = <long long> 1 << 62


def max_occupancy(long long[::1] starts, long long[::1] cores_by_start,
                  long long[::1] ends, long long[::1] cores_by_end,
                  long long ws, long long we):
    cdef Py_ssize_t n = starts.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef long long occ = 0, best, ts, te
    if ws >= we:
        return 0
    while i < n and starts[i] <= ws:
        occ += cores_by_start[i]
        i += 1
    while j < n and ends[j] <= ws:
        occ -= cores_by_end[j]
        j += 1
    best = occ
    while True:
        ts = starts[i] if i < n else INF
        te = ends[j] if j < n else INF
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


def earliest_feasible(long long[::1] starts, long long[::1] cores_by_start,
                      long long[::1] ends, long long[::1] cores_by_end,
                      long long total, long long req,
                      long long earliest, long long latest, long long duration):
    cdef Py_ssize_t n = starts.shape[0]
    cdef long long free_max = total - req
    cdef long long cap, occ, ts, te, t, a, b, cand, right, best
    cdef Py_ssize_t i = 0, j = 0, m, add, head, tail, ci, cj
    cdef long long *T
    cdef long long *O
    cdef Py_ssize_t *dq

    if req > total or latest < earliest:
        return (-1, -1)
    cap = latest + duration

    occ = 0
    while i < n and starts[i] <= earliest:
        occ += cores_by_start[i]
        i += 1
    while j < n and ends[j] <= earliest:
        occ -= cores_by_end[j]
        j += 1

    T = <long long *> malloc((2 * n + 3) * sizeof(long long))
    O = <long long *> malloc((2 * n + 2) * sizeof(long long))
    dq = <Py_ssize_t *> malloc((2 * n + 2) * sizeof(Py_ssize_t))
    if T == NULL or O == NULL or dq == NULL:
        free(T)
        free(O)
        free(dq)
        raise MemoryError()

    T[0] = earliest
    O[0] = occ
    m = 1
    while True:
        ts = starts[i] if i < n else INF
        te = ends[j] if j < n else INF
        t = ts if ts <= te else te
        if t >= cap:
            break
        while i < n and starts[i] == t:
            occ += cores_by_start[i]
            i += 1
        while j < n and ends[j] == t:
            occ -= cores_by_end[j]
            j += 1
        T[m] = t
        O[m] = occ
        m += 1
    T[m] = cap

    head = 0
    tail = 0
    add = 0
    ci = 1
    cj = 1
    cand = earliest
    try:
        while True:
            right = cand + duration
            while add < m and T[add] < right:
                while tail > head and O[dq[tail - 1]] <= O[add]:
                    tail -= 1
                dq[tail] = add
                tail += 1
                add += 1
            while tail > head and T[dq[head] + 1] <= cand:
                head += 1
            best = O[dq[head]]
            if best <= free_max:
                return (int(cand), int(best))
            while ci < m and T[ci] <= cand:
                ci += 1
            while cj <= m and T[cj] - duration <= cand:
                cj += 1
            a = T[ci] if ci < m else INF
            b = T[cj] - duration if cj <= m else INF
            cand = a if a <= b else b
            if cand > latest or cand >= INF:
                return (-1, -1)
    finally:
        free(T)
        free(O)
        free(dq)
