"""Standard Workload Format parsing and serialization.

18 whitespace-separated integer fields per data line; lines starting with
`;` are header comments. All fields are retained verbatim so a parsed log
serializes back without loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

FIELD_COUNT = 18


class SwfParseError(ValueError):
    pass


@dataclass(frozen=True)
class SwfJob:
    """One job record; raw fields kept for round-trip fidelity."""

    fields: tuple[int, ...]

    def __post_init__(self):
        if len(self.fields) != FIELD_COUNT:
            raise SwfParseError(f"expected {FIELD_COUNT} fields, got {len(self.fields)}")

    @property
    def job_id(self) -> int:
        return self.fields[0]

    @property
    def submit_time(self) -> int:
        return self.fields[1]

    @property
    def wait_time(self) -> int:
        return self.fields[2]

    @property
    def run_time(self) -> int:
        return self.fields[3]

    @property
    def allocated_processors(self) -> int:
        return self.fields[4]

    @property
    def requested_processors(self) -> int:
        return self.fields[7]

    @property
    def requested_walltime(self) -> int:
        return self.fields[8]

    @property
    def status(self) -> int:
        return self.fields[10]

    # Occupancy view. Jobs occupy [start, start + walltime) where the
    # walltime is the requested one (run_time fallback for -1 sentinels);
    # jobs with no usable duration or core count are invisible to load.

    @property
    def start(self) -> int:
        return self.submit_time + self.wait_time

    @property
    def occupancy_duration(self) -> Optional[int]:
        if self.requested_walltime > 0:
            return self.requested_walltime
        if self.run_time > 0:
            return self.run_time
        return None

    @property
    def occupancy_cores(self) -> Optional[int]:
        if self.allocated_processors > 0:
            return self.allocated_processors
        if self.requested_processors > 0:
            return self.requested_processors
        return None


@dataclass(frozen=True)
class SwfLog:
    comments: tuple[str, ...]
    jobs: tuple[SwfJob, ...]


def parse_swf(text: str) -> SwfLog:
    """Parse SWF text; jobs come out sorted by submit time (stable)."""
    comments: list[str] = []
    jobs: list[SwfJob] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(";"):
            comments.append(raw.rstrip("\n"))
            continue
        parts = line.split()
        if len(parts) != FIELD_COUNT:
            raise SwfParseError(f"line {lineno}: expected {FIELD_COUNT} fields, got {len(parts)}")
        try:
            values = tuple(int(p) for p in parts)
        except ValueError:
            raise SwfParseError(f"line {lineno}: non-numeric field") from None
        jobs.append(SwfJob(values))
    jobs.sort(key=lambda j: j.submit_time)
    return SwfLog(comments=tuple(comments), jobs=tuple(jobs))


def serialize_swf(log: SwfLog) -> str:
    """Comments first, then one line per job, fields space-separated."""
    lines = list(log.comments)
    for job in log.jobs:
        lines.append(" ".join(str(f) for f in job.fields))
    return "\n".join(lines) + "\n"
