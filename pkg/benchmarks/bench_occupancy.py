"""Times the occupancy kernels: compiled extension vs pure Python.

Run from the repository root:

    python3 benchmarks/bench_occupancy.py [--jobs N] [--queries N]

Both implementations answer the same randomized query batch; the script
asserts agreement before reporting timings.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from ramp.queuesim import _occupancy_py

try:
    from ramp.queuesim import _occupancy_cy
except ImportError:
    _occupancy_cy = None


def make_schedule(n_jobs: int, rng: random.Random):
    rows = []
    for _ in range(n_jobs):
        start = rng.randrange(0, 2_000_000)
        rows.append((start, start + rng.randrange(60, 90_000),
                     rng.randrange(1, 4096)))
    starts = np.array([r[0] for r in rows], dtype=np.int64)
    ends = np.array([r[1] for r in rows], dtype=np.int64)
    cores = np.array([r[2] for r in rows], dtype=np.int64)
    by_start = np.argsort(starts, kind="stable")
    by_end = np.argsort(ends, kind="stable")
    return (np.ascontiguousarray(starts[by_start]),
            np.ascontiguousarray(cores[by_start]),
            np.ascontiguousarray(ends[by_end]),
            np.ascontiguousarray(cores[by_end]))


def run(impl, arrays, windows, feasible_queries):
    t0 = time.perf_counter()
    occ = [impl.max_occupancy(*arrays, ws, we) for ws, we in windows]
    t1 = time.perf_counter()
    fea = [impl.earliest_feasible(*arrays, 163_840, req, lo, hi, dur)
           for req, lo, hi, dur in feasible_queries]
    t2 = time.perf_counter()
    return occ, fea, t1 - t0, t2 - t1


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--jobs", type=int, default=20_000)
    parser.add_argument("--queries", type=int, default=2_000)
    args = parser.parse_args()

    rng = random.Random(7)
    arrays = make_schedule(args.jobs, rng)
    windows = []
    for _ in range(args.queries):
        ws = rng.randrange(0, 2_000_000)
        windows.append((ws, ws + rng.randrange(60, 90_000)))
    feasible_queries = []
    for _ in range(args.queries):
        lo = rng.randrange(0, 1_500_000)
        feasible_queries.append((rng.randrange(64, 32_768), lo,
                                 lo + rng.randrange(0, 500_000),
                                 rng.randrange(600, 43_200)))

    occ_py, fea_py, t_occ_py, t_fea_py = run(_occupancy_py, arrays,
                                             windows, feasible_queries)
    print(f"{args.jobs} jobs, {args.queries} queries per kernel")
    print(f"pure python   max_occupancy {t_occ_py:8.3f}s   "
          f"earliest_feasible {t_fea_py:8.3f}s")

    if _occupancy_cy is None:
        print("compiled kernel not built; set up with "
              "`pip install -e . --no-build-isolation`")
        return 0

    occ_cy, fea_cy, t_occ_cy, t_fea_cy = run(_occupancy_cy, arrays,
                                             windows, feasible_queries)
    assert occ_py == occ_cy, "kernels disagree on max_occupancy"
    assert fea_py == fea_cy, "kernels disagree on earliest_feasible"
    print(f"compiled      max_occupancy {t_occ_cy:8.3f}s   "
          f"earliest_feasible {t_fea_cy:8.3f}s")
    print(f"speedup       max_occupancy {t_occ_py / t_occ_cy:7.1f}x   "
          f"earliest_feasible {t_fea_py / t_fea_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
