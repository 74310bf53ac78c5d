"""RFQ document model and validation rules.

A document carries one or more requests (the units of a combinatorial
auction). Term vocabulary is closed; dates travel as ISO-8601 UTC strings
in XML and as epoch seconds internally.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from typing import Optional

from ..money import to_money

# Closed vocabulary, in canonical (serialization) order.
TERM_NAMES = (
    "CPUHourCost",
    "EndDate",
    "EndTime",
    "StartDate",
    "StartTime",
    "OperatingSystem",
    "OSVersion",
    "Architecture",
    "CPUSpeed",
    "WallTime",
    "TotalDiskSpace",
    "NodeDiskSpace",
    "InterNodeBandwidth",
    "RAMPerCore",
    "TotalCores",
    "NodeCount",
    "NodeCores",
)

_DATE_FMT = "%Y-%m-%d"
_TIME_FMT = "%H:%M:%S"


@dataclass(frozen=True)
class Violation:
    """One broken validation rule, addressable by request and term."""

    request_index: Optional[int]
    term: str
    message: str

    def __str__(self) -> str:
        where = "document" if self.request_index is None else f"request {self.request_index}"
        return f"{where}: {self.term}: {self.message}"


@dataclass(frozen=True)
class RfqRequest:
    """One unit of a request-for-quotation.

    cpu_hour_cost is the price the user is willing to pay per core-hour;
    deadline/start are epoch seconds (UTC); wall_time is the maximum run
    duration in seconds. Optional terms constrain matching only when
    present. Exactly one of total_cores or (node_count, node_cores) names
    the shape of the allocation.
    """

    cpu_hour_cost: Decimal
    deadline: int
    wall_time: int
    start: Optional[int] = None
    operating_system: Optional[str] = None
    os_version: Optional[str] = None
    architecture: Optional[str] = None
    cpu_speed: Optional[float] = None
    total_disk_space: Optional[int] = None
    node_disk_space: Optional[int] = None
    inter_node_bandwidth: Optional[int] = None
    ram_per_core: Optional[int] = None
    total_cores: Optional[int] = None
    node_count: Optional[int] = None
    node_cores: Optional[int] = None

    def cores(self) -> int:
        """Total cores requested, whatever the shape."""
        if self.total_cores is not None:
            return self.total_cores
        return (self.node_count or 0) * (self.node_cores or 0)

    def with_price(self, price: Decimal) -> "RfqRequest":
        return replace(self, cpu_hour_cost=to_money(price))


@dataclass(frozen=True)
class RfqDocument:
    document_id: str
    requests: tuple[RfqRequest, ...]


@dataclass(frozen=True)
class ResourceProfile:
    """Static capabilities a resource advertises; same units as RfqRequest.

    Total advertised cores is always node_count * node_cores; when
    total_disk_space is not configured it derives from the node disk.
    """

    operating_system: str
    os_version: str
    architecture: str
    cpu_speed: float
    ram_per_core: int
    node_count: int
    node_cores: int
    node_disk_space: int = 0
    inter_node_bandwidth: int = 0
    total_disk_space: Optional[int] = None

    @property
    def total_cores(self) -> int:
        return self.node_count * self.node_cores

    @property
    def effective_total_disk(self) -> int:
        if self.total_disk_space is not None:
            return self.total_disk_space
        return self.node_disk_space * self.node_count


def validate_request(req: RfqRequest, index: int) -> list[Violation]:
    """All invariant violations for one request; empty means valid."""
    out: list[Violation] = []

    def bad(term: str, message: str) -> None:
        out.append(Violation(index, term, message))

    if req.cpu_hour_cost is None:
        bad("CPUHourCost", "required term absent")
    elif req.cpu_hour_cost <= 0:
        bad("CPUHourCost", "must be positive")
    if req.deadline is None:
        bad("EndDate", "required term absent")
    if req.wall_time is None:
        bad("WallTime", "required term absent")
    elif req.wall_time <= 0:
        bad("WallTime", "must be positive")

    has_total = req.total_cores is not None
    has_nodes = req.node_count is not None or req.node_cores is not None
    if has_total and has_nodes:
        bad("TotalCores", "mutually exclusive with NodeCount/NodeCores")
    elif has_total:
        if req.total_cores <= 0:
            bad("TotalCores", "must be positive")
    elif has_nodes:
        if req.node_count is None or req.node_cores is None:
            bad("NodeCount", "NodeCount and NodeCores must appear together")
        else:
            if req.node_count <= 0:
                bad("NodeCount", "must be positive")
            if req.node_cores <= 0:
                bad("NodeCores", "must be positive")
    else:
        bad("TotalCores", "either TotalCores or NodeCount+NodeCores is required")

    if req.total_disk_space is not None and req.node_disk_space is not None:
        bad("TotalDiskSpace", "mutually exclusive with NodeDiskSpace")

    for term, value in (
        ("CPUSpeed", req.cpu_speed),
        ("TotalDiskSpace", req.total_disk_space),
        ("NodeDiskSpace", req.node_disk_space),
        ("InterNodeBandwidth", req.inter_node_bandwidth),
        ("RAMPerCore", req.ram_per_core),
    ):
        if value is not None and value < 0:
            bad(term, "must not be negative")

    if req.deadline is not None and req.start is not None:
        if req.deadline <= req.start:
            bad("EndDate", "deadline must be after earliest start")
        elif req.wall_time is not None and req.deadline - req.start < req.wall_time:
            bad("WallTime", "window between start and deadline does not admit wall_time")

    return out


def validate_rfq(doc: RfqDocument) -> list[Violation]:
    """Empty list iff every request satisfies the invariants."""
    out: list[Violation] = []
    if not doc.requests:
        out.append(Violation(None, "Request", "document must contain at least one request"))
    for i, req in enumerate(doc.requests):
        out.extend(validate_request(req, i))
    return out


def match_static(profile: ResourceProfile, request: RfqRequest) -> bool:
    """True iff every term present in the request is satisfied by the profile.

    Identity terms compare by equality; capacities require profile >= request.
    Node-shaped requests are satisfied only without splitting a request node
    across physical nodes.
    """
    if request.operating_system is not None and profile.operating_system != request.operating_system:
        return False
    if request.os_version is not None and profile.os_version != request.os_version:
        return False
    if request.architecture is not None and profile.architecture != request.architecture:
        return False
    if request.cpu_speed is not None and profile.cpu_speed < request.cpu_speed:
        return False
    if request.ram_per_core is not None and profile.ram_per_core < request.ram_per_core:
        return False
    if request.inter_node_bandwidth is not None and profile.inter_node_bandwidth < request.inter_node_bandwidth:
        return False
    if request.total_disk_space is not None and profile.effective_total_disk < request.total_disk_space:
        return False
    if request.node_disk_space is not None and profile.node_disk_space < request.node_disk_space:
        return False
    if request.total_cores is not None:
        if request.total_cores > profile.total_cores:
            return False
    else:
        if (request.node_cores or 0) > profile.node_cores:
            return False
        if (request.node_count or 0) > profile.node_count:
            return False
    return True


# --- term dictionary mapping (shared by XML io and the wire ontology) ---

def _epoch_from(date_s: str, time_s: str) -> int:
    dt = datetime.strptime(f"{date_s} {time_s}", f"{_DATE_FMT} {_TIME_FMT}")
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def _date_time_of(epoch: int) -> tuple[str, str]:
    dt = datetime.fromtimestamp(epoch, tz=timezone.utc)
    return dt.strftime(_DATE_FMT), dt.strftime(_TIME_FMT)


def request_to_terms(req: RfqRequest) -> dict:
    """Request as a {term name: value} dict in the RFQL vocabulary.

    Money is a 2dp string, dates/times ISO strings, counts ints,
    CPUSpeed a float. Absent terms are omitted.
    """
    terms: dict = {"CPUHourCost": f"{to_money(req.cpu_hour_cost):.2f}"}
    end_date, end_time = _date_time_of(req.deadline)
    terms["EndDate"] = end_date
    terms["EndTime"] = end_time
    if req.start is not None:
        start_date, start_time = _date_time_of(req.start)
        terms["StartDate"] = start_date
        terms["StartTime"] = start_time
    for term, value in (
        ("OperatingSystem", req.operating_system),
        ("OSVersion", req.os_version),
        ("Architecture", req.architecture),
        ("CPUSpeed", req.cpu_speed),
        ("WallTime", req.wall_time),
        ("TotalDiskSpace", req.total_disk_space),
        ("NodeDiskSpace", req.node_disk_space),
        ("InterNodeBandwidth", req.inter_node_bandwidth),
        ("RAMPerCore", req.ram_per_core),
        ("TotalCores", req.total_cores),
        ("NodeCount", req.node_count),
        ("NodeCores", req.node_cores),
    ):
        if value is not None:
            terms[term] = value
    return terms


def request_from_terms(terms: dict, index: int = 0) -> tuple[Optional[RfqRequest], list[Violation]]:
    """Build a request from a term dict, collecting type violations.

    Returns (request, violations); request is None when required terms are
    missing or unparseable. Invariant checking beyond types is the
    validator's job.
    """
    violations: list[Violation] = []

    def bad(term: str, message: str) -> None:
        violations.append(Violation(index, term, message))

    unknown = set(terms) - set(TERM_NAMES)
    for term in sorted(unknown):
        bad(term, "unknown term")

    def get_int(term: str) -> Optional[int]:
        if term not in terms:
            return None
        try:
            return int(str(terms[term]).strip())
        except ValueError:
            bad(term, f"not an integer: {terms[term]!r}")
            return None

    def get_float(term: str) -> Optional[float]:
        if term not in terms:
            return None
        try:
            return float(str(terms[term]).strip())
        except ValueError:
            bad(term, f"not a number: {terms[term]!r}")
            return None

    def get_str(term: str) -> Optional[str]:
        if term not in terms:
            return None
        return str(terms[term]).strip()

    cost: Optional[Decimal] = None
    if "CPUHourCost" not in terms:
        bad("CPUHourCost", "required term absent")
    else:
        try:
            cost = to_money(Decimal(str(terms["CPUHourCost"]).strip()))
        except (InvalidOperation, ValueError):
            bad("CPUHourCost", f"not a price: {terms['CPUHourCost']!r}")

    def get_epoch(date_term: str, time_term: str, required: bool) -> Optional[int]:
        date_s, time_s = get_str(date_term), get_str(time_term)
        if date_s is None and time_s is None:
            if required:
                bad(date_term, "required term absent")
            return None
        if date_s is None or time_s is None:
            bad(date_term if date_s is None else time_term,
                f"{date_term} and {time_term} must appear together")
            return None
        try:
            return _epoch_from(date_s, time_s)
        except ValueError:
            bad(date_term, f"not an ISO-8601 UTC date/time: {date_s!r} {time_s!r}")
            return None

    deadline = get_epoch("EndDate", "EndTime", required=True)
    start = get_epoch("StartDate", "StartTime", required=False)

    wall_time = get_int("WallTime")
    if "WallTime" not in terms:
        bad("WallTime", "required term absent")

    operating_system = get_str("OperatingSystem")
    os_version = get_str("OSVersion")
    architecture = get_str("Architecture")
    cpu_speed = get_float("CPUSpeed")
    total_disk_space = get_int("TotalDiskSpace")
    node_disk_space = get_int("NodeDiskSpace")
    inter_node_bandwidth = get_int("InterNodeBandwidth")
    ram_per_core = get_int("RAMPerCore")
    total_cores = get_int("TotalCores")
    node_count = get_int("NodeCount")
    node_cores = get_int("NodeCores")

    if violations:
        return None, violations
    req = RfqRequest(
        cpu_hour_cost=cost,
        deadline=deadline,
        wall_time=wall_time,
        start=start,
        operating_system=operating_system,
        os_version=os_version,
        architecture=architecture,
        cpu_speed=cpu_speed,
        total_disk_space=total_disk_space,
        node_disk_space=node_disk_space,
        inter_node_bandwidth=inter_node_bandwidth,
        ram_per_core=ram_per_core,
        total_cores=total_cores,
        node_count=node_count,
        node_cores=node_cores,
    )
    return req, violations
