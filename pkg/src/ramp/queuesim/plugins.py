"""Queue back-end plug-in interface.

A queue back-end exposes exactly two operations: an availability query and
a reserve call. The simulated queue wraps a MachineModel; a predictive
wait-time service could be slotted in behind the same two calls (the
adapter here is deliberately a stub).
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

from .machine import LoadResult, MachineModel


@runtime_checkable
class QueuePlugin(Protocol):
    def query(self, at: float, cores: int, duration: int) -> LoadResult:
        """Feasibility and load for the window [at, at+duration)."""

    def reserve(self, at: float, cores: int, duration: int) -> str:
        """Place a reservation; returns its id or raises ReservationRefused."""


class SimulatedQueue:
    """Log-replay queue: the only shipped back-end."""

    def __init__(self, machine: MachineModel):
        self.machine = machine

    def query(self, at: float, cores: int, duration: int) -> LoadResult:
        return self.machine.snapshot_load(at, cores, duration)

    def reserve(self, at: float, cores: int, duration: int) -> str:
        return self.machine.place_reservation(at, cores, duration)


class PredictiveServiceAdapter:
    """Placeholder for a wait-time prediction service back-end."""

    def query(self, at: float, cores: int, duration: int) -> LoadResult:
        raise NotImplementedError("predictive service integration is out of scope")

    def reserve(self, at: float, cores: int, duration: int) -> str:
        raise NotImplementedError("predictive service integration is out of scope")
