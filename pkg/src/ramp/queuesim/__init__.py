"""Workload-log-backed queue simulation.

Replays Standard Workload Format logs as a live queuing system: load
snapshots, feasibility queries, and advance reservations with a
tentative/held/confirmed lifecycle.
"""

from .machine import (
    LoadResult,
    MachineModel,
    ReservationRecord,
    ReservationRefused,
    ReservationState,
    ReservationUnknown,
    SimClock,
    TransitionError,
)
from .occupancy import kernel_name
from .plugins import PredictiveServiceAdapter, QueuePlugin, SimulatedQueue
from .swf import SwfJob, SwfLog, SwfParseError, parse_swf, serialize_swf

__all__ = [
    "LoadResult",
    "MachineModel",
    "ReservationRecord",
    "ReservationRefused",
    "ReservationState",
    "ReservationUnknown",
    "SimClock",
    "TransitionError",
    "kernel_name",
    "PredictiveServiceAdapter",
    "QueuePlugin",
    "SimulatedQueue",
    "SwfJob",
    "SwfLog",
    "SwfParseError",
    "parse_swf",
    "serialize_swf",
]
