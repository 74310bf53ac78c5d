"""Interfaces shared by the virtual and live agent runtimes."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

from ramp.protocol.messages import AclMessage


@runtime_checkable
class Context(Protocol):
    """Facilities available to an agent while it handles an event."""

    name: str

    def now(self) -> float:
        """Current time in seconds (virtual or wall, per runtime)."""
        ...

    def send(self, msg: AclMessage) -> None:
        """Route a message to msg.receiver."""
        ...

    def set_timer(self, delay: float, payload: object = None) -> int:
        """Arm a one-shot timer; on_timer fires after `delay` seconds."""
        ...

    def cancel_timer(self, timer_id: int) -> None:
        """Disarm a timer if it has not run yet. Unknown ids are ignored."""
        ...

    def record(self, kind: str, **fields) -> None:
        """Append a domain record to the runtime transcript."""
        ...


class Agent:
    """Base class for market participants.

    Handlers run one at a time per agent. Each invocation occupies the
    agent for a service interval, so replies queue behind earlier work
    and response times degrade honestly as an inbox fills.
    """

    def __init__(self, name: str):
        self.name = name

    def on_start(self, ctx: Context) -> None:
        pass

    def handle_message(self, ctx: Context, msg: AclMessage) -> None:
        pass

    def on_timer(self, ctx: Context, timer_id: int, payload: object) -> None:
        pass
