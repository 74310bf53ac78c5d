#!/usr/bin/env python3
"""Generate the synthetic SWF logs shipped in testdata/logs/.

Each base-system log carries a controlled load block around every offset
the default scenario reads from, so machine load at bid time is a design
input rather than an accident of replay:

  light   a single narrow job; the machine concedes aggressively and
          stays at the top of the attractiveness ranking
  steady  one job holding ~60% of the cores for a few hours
  busy    the whole machine for sixteen hours; zero concession, and
          feasible starts get pushed past the block

The files are deterministic; re-run this script after changing the
design. Real production logs from the Parallel Workloads Archive can be
substituted, see fetch_logs.md.
"""

from __future__ import annotations

import random
from pathlib import Path

HOUR = 3600

SYSTEM_CORES = {
    "atlas": 9216,
    "thunder": 4008,
    "intrepid": 163840,
    "ricc": 8192,
    "curie": 93312,
}

# resource -> (base system, log offset, load profile)
RESOURCES = {
    "atlas1": ("atlas", 3370000, "busy"),
    "atlas2": ("atlas", 1370000, "busy"),
    "thunder1": ("thunder", 250000, "steady"),
    "thunder2": ("thunder", 1300000, "steady"),
    "thunder3": ("thunder", 130000, "steady"),
    "thunder4": ("thunder", 450000, "steady"),
    "intrepid1": ("intrepid", 50000, "steady"),
    "intrepid2": ("intrepid", 1500000, "light"),
    "intrepid3": ("intrepid", 15000000, "busy"),
    "intrepid4": ("intrepid", 750000, "steady"),
    "intrepid5": ("intrepid", 2500000, "busy"),
    "intrepid6": ("intrepid", 90000, "steady"),
    "ricc1": ("ricc", 50000, "busy"),
    "ricc2": ("ricc", 7570000, "busy"),
    "ricc3": ("ricc", 500000, "busy"),
    "ricc4": ("ricc", 757000, "steady"),
    "curie1": ("curie", 150000, "light"),
    "curie2": ("curie", 1375000, "steady"),
    "curie3": ("curie", 350000, "light"),
    "curie4": ("curie", 2375000, "steady"),
}

# occupied span measured from the offset; every block starts one hour early
SPAN = {"light": 24 * HOUR, "steady": 6 * HOUR, "busy": 16 * HOUR}
FRACTION = {"light": 0.05, "steady": 0.60, "busy": 1.0}
LIGHT_OVERRIDE = {"curie1": 0.10}


def job_line(job_id: int, submit: int, wait: int, run: int, procs: int,
             status: int = 1) -> str:
    fields = [job_id, submit, wait, run, procs, -1, -1, procs, run, -1,
              status, 1, 1, 1, 1, 1, -1, 0]
    return " ".join(str(f) for f in fields)


def block_jobs(offset: int, cores: int, profile: str,
               resource: str) -> list[tuple[int, int, int]]:
    """(submit, run, procs) rows saturating the designed fraction."""
    span = SPAN[profile] + 2 * HOUR  # one hour of margin on both sides
    submit = offset - HOUR
    fraction = LIGHT_OVERRIDE.get(resource, FRACTION[profile])
    want = round(cores * fraction)
    if profile == "busy":
        # four equal slabs look more like a log than one machine-wide job
        slab = cores // 4
        return [(submit, span, slab) for _ in range(4)]
    return [(submit, span, want)]


def system_log(system: str) -> str:
    cores = SYSTEM_CORES[system]
    rows = []
    for resource, (base, offset, profile) in sorted(
            RESOURCES.items(), key=lambda kv: kv[1][1]):
        if base != system:
            continue
        rows.extend(block_jobs(offset, cores, profile, resource))
    rows.sort()
    lines = [
        f"; Synthetic workload for the {system} base system",
        f"; MaxProcs: {cores}",
        "; Note: controlled-load blocks, one per scenario offset",
    ]
    for i, (submit, run, procs) in enumerate(rows, start=1):
        lines.append(job_line(i, submit, 0, run, procs))
    return "\n".join(lines) + "\n"


def sample_log(n_jobs: int = 50, seed: int = 42) -> str:
    """A small mixed log in archive style, used by the round-trip tests."""
    rng = random.Random(seed)
    lines = [
        "; Version: 2.2",
        "; Computer: synthetic cluster",
        "; MaxJobs: 50",
        "; MaxProcs: 512",
        "; Note: generated sample in Standard Workload Format",
    ]
    submit = 0
    for job_id in range(1, n_jobs + 1):
        submit += rng.randrange(1, 900)
        wait = rng.randrange(0, 1200)
        run = rng.randrange(60, 14400)
        procs = rng.choice([1, 2, 4, 8, 16, 32, 64, 128])
        status = rng.choice([1, 1, 1, 1, 0, 5])
        req_wall = run + rng.randrange(0, 600)
        fields = [job_id, submit, wait, run, procs, rng.randrange(10, 100),
                  procs * 512, procs, req_wall, -1, status,
                  rng.randrange(1, 20), rng.randrange(1, 5),
                  rng.randrange(1, 10), rng.randrange(1, 4), 1, -1, 0]
        lines.append(" ".join(str(f) for f in fields))
    return "\n".join(lines) + "\n"


def main() -> None:
    out = Path(__file__).parent / "logs"
    out.mkdir(exist_ok=True)
    for system in SYSTEM_CORES:
        (out / f"{system}.swf").write_text(system_log(system))
        print(f"wrote logs/{system}.swf")
    (out / "sample.swf").write_text(sample_log())
    print("wrote logs/sample.swf")


if __name__ == "__main__":
    main()
