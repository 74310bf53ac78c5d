"""Deterministic discrete-event runtime.

Virtual time advances only when events fire, so hour-long negotiations
replay in milliseconds. Each agent is a serial server: a message
delivered at time t begins service at max(t, busy_until) and its
handler runs at the completion instant. Queueing delay is therefore
modelled explicitly and grows with inbox depth.

Event ordering is a (time, seq) heap with a monotonically increasing
seq, which makes runs fully deterministic for a fixed schedule.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional, Union

from ramp.protocol.messages import AclMessage
from ramp.runtime.core import Agent

# service: handler occupancy per event; latency: wire transit per message
DEFAULT_SERVICE_TIME = 0.020
DEFAULT_LATENCY = 0.002

ServiceTime = Union[float, Callable[[str, object], float]]


@dataclass
class _AgentState:
    agent: Agent
    busy_until: float = 0.0


class _VirtualContext:
    def __init__(self, runtime: "VirtualRuntime", name: str):
        self.name = name
        self._rt = runtime

    def now(self) -> float:
        return self._rt.now()

    def send(self, msg: AclMessage) -> None:
        self._rt._route(self.name, msg)

    def set_timer(self, delay: float, payload: object = None) -> int:
        return self._rt._set_timer(self.name, delay, payload)

    def cancel_timer(self, timer_id: int) -> None:
        self._rt._cancel_timer(timer_id)

    def record(self, kind: str, **fields) -> None:
        self._rt.add_record(kind, self.name, **fields)


class VirtualRuntime:
    """Runs a set of agents against a virtual clock.

    Usage: add agents, schedule external kicks with schedule_call, then
    run(). The transcript collects one dict per send, receive, and
    domain record; metrics are computed from it after the run.
    """

    def __init__(self, service_time: ServiceTime = DEFAULT_SERVICE_TIME,
                 latency: float = DEFAULT_LATENCY, start_time: float = 0.0):
        self._service_time = service_time
        self._latency = latency
        self._now = start_time
        self._seq = 0
        self._heap: list[tuple] = []
        self._agents: dict[str, _AgentState] = {}
        self._contexts: dict[str, _VirtualContext] = {}
        self._cancelled: set[int] = set()
        self._next_timer = 1
        self.transcripts: list[dict] = []

    # --- assembly ---

    def add_agent(self, agent: Agent) -> None:
        if agent.name in self._agents:
            raise ValueError(f"duplicate agent name: {agent.name}")
        self._agents[agent.name] = _AgentState(agent)
        self._contexts[agent.name] = _VirtualContext(self, agent.name)
        self._enter(self._now, agent.name, None,
                    lambda a, ctx: a.on_start(ctx))

    def agent(self, name: str) -> Agent:
        return self._agents[name].agent

    def context_of(self, name: str) -> _VirtualContext:
        return self._contexts[name]

    def schedule_call(self, time: float, agent_name: str,
                      fn: Callable[[Agent, "_VirtualContext"], None]) -> None:
        """Queue fn(agent, ctx) through the agent's serial pipeline."""
        if time < self._now:
            raise ValueError(f"cannot schedule at {time} before now={self._now}")
        if agent_name not in self._agents:
            raise KeyError(agent_name)
        self._enter(time, agent_name, None, fn)

    # --- clock and transcript ---

    def now(self) -> float:
        return self._now

    def add_record(self, kind: str, agent: str, **fields) -> None:
        self.transcripts.append({"time": self._now, "type": kind,
                                 "agent": agent, **fields})

    # --- event plumbing ---

    def _push(self, time: float, kind: str, *data) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, kind, data))

    def _enter(self, time: float, name: str, item: object,
               runner: Callable) -> None:
        """Admit work into an agent's serial pipeline at `time`."""
        self._push(time, "enter", name, item, runner)

    def _route(self, sender: str, msg: AclMessage) -> None:
        self.add_record("send", sender, performative=msg.performative.value,
                        receiver=msg.receiver, conversation_id=msg.conversation_id,
                        message_id=msg.message_id)
        if msg.receiver not in self._agents:
            self.add_record("undeliverable", sender, receiver=msg.receiver,
                            message_id=msg.message_id)
            return
        delivered_at = self._now + self._latency

        def runner(agent: Agent, ctx: _VirtualContext,
                   _msg=msg, _at=delivered_at) -> None:
            self.add_record("recv", agent.name,
                            performative=_msg.performative.value,
                            sender=_msg.sender, conversation_id=_msg.conversation_id,
                            message_id=_msg.message_id, delivered_at=_at)
            agent.handle_message(ctx, _msg)

        self._enter(delivered_at, msg.receiver, msg, runner)

    def _set_timer(self, name: str, delay: float, payload: object) -> int:
        if delay < 0:
            raise ValueError("timer delay must be >= 0")
        timer_id = self._next_timer
        self._next_timer += 1
        self._push(self._now + delay, "timer", name, timer_id, payload)
        return timer_id

    def _cancel_timer(self, timer_id: int) -> None:
        self._cancelled.add(timer_id)

    def _service_of(self, name: str, item: object) -> float:
        if callable(self._service_time):
            return self._service_time(name, item)
        return self._service_time

    # --- main loop ---

    def run(self, until: Optional[float] = None,
            max_events: int = 5_000_000) -> None:
        """Process events in time order until the heap drains or `until`.

        Events scheduled beyond `until` stay queued for a later run call.
        """
        processed = 0
        while self._heap:
            time = self._heap[0][0]
            if until is not None and time > until:
                break
            _, _, kind, data = heapq.heappop(self._heap)
            self._now = time
            self._dispatch(kind, data)
            processed += 1
            if processed > max_events:
                raise RuntimeError("virtual runtime exceeded its event budget")
        if until is not None and until > self._now:
            self._now = until

    def _dispatch(self, kind: str, data: tuple) -> None:
        if kind == "enter":
            name, item, runner = data
            state = self._agents[name]
            done = max(self._now, state.busy_until) + self._service_of(name, item)
            state.busy_until = done
            self._push(done, "exec", name, runner)
        elif kind == "exec":
            name, runner = data
            state = self._agents[name]
            runner(state.agent, self._contexts[name])
        elif kind == "timer":
            name, timer_id, payload = data
            if timer_id in self._cancelled:
                self._cancelled.discard(timer_id)
                return

            def runner(agent: Agent, ctx: _VirtualContext,
                       _tid=timer_id, _payload=payload) -> None:
                if _tid in self._cancelled:
                    self._cancelled.discard(_tid)
                    return
                agent.on_timer(ctx, _tid, _payload)

            self._enter(self._now, name, None, runner)
        else:  # pragma: no cover - kinds are internal
            raise AssertionError(f"unknown event kind {kind}")
