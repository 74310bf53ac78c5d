"""Wall-clock runtime: one worker thread per agent, TCP between peers.

Same Agent contract as the virtual runtime. Agents co-resident in one
process route messages in-memory; anything else is dialed from an
address book. Replies to a remote peer prefer the connection that peer
opened to us, so a client without a listening port still gets answers.

A protocol violation on a connection (bad frame, unknown performative)
closes that connection only; the agent loops keep running.
"""

from __future__ import annotations

import queue
import socket
import threading
import time
from typing import Callable, Optional

from ramp.protocol.codec import ProtocolError, decode_body, encode_message
from ramp.protocol.messages import AclMessage
from ramp.protocol.transport import FrameStream, connect
from ramp.runtime.core import Agent

Address = tuple[str, int]


class _LiveContext:
    def __init__(self, runtime: "LiveRuntime", loop: "_AgentLoop"):
        self.name = loop.agent.name
        self._rt = runtime
        self._loop = loop

    def now(self) -> float:
        return time.time()

    def send(self, msg: AclMessage) -> None:
        self._rt._route(self.name, msg)

    def set_timer(self, delay: float, payload: object = None) -> int:
        return self._loop.set_timer(delay, payload)

    def cancel_timer(self, timer_id: int) -> None:
        self._loop.cancel_timer(timer_id)

    def record(self, kind: str, **fields) -> None:
        self._rt.add_record(kind, self.name, **fields)


class _AgentLoop(threading.Thread):
    """Serial executor for one agent: messages, timers, injected calls."""

    def __init__(self, runtime: "LiveRuntime", agent: Agent):
        super().__init__(name=f"agent-{agent.name}", daemon=True)
        self.agent = agent
        self._rt = runtime
        self._inbox: queue.SimpleQueue = queue.SimpleQueue()
        self._timers: dict[int, threading.Timer] = {}
        self._cancelled: set[int] = set()
        self._next_timer = 1
        self._timer_lock = threading.Lock()
        self.ctx = _LiveContext(runtime, self)

    def enqueue(self, item: tuple) -> None:
        self._inbox.put(item)

    def set_timer(self, delay: float, payload: object) -> int:
        with self._timer_lock:
            timer_id = self._next_timer
            self._next_timer += 1
        timer = threading.Timer(
            delay, lambda: self.enqueue(("timer", timer_id, payload)))
        timer.daemon = True
        with self._timer_lock:
            self._timers[timer_id] = timer
        timer.start()
        return timer_id

    def cancel_timer(self, timer_id: int) -> None:
        with self._timer_lock:
            self._cancelled.add(timer_id)
            timer = self._timers.pop(timer_id, None)
        if timer is not None:
            timer.cancel()

    def stop_timers(self) -> None:
        with self._timer_lock:
            timers = list(self._timers.values())
            self._timers.clear()
        for timer in timers:
            timer.cancel()

    def run(self) -> None:
        while True:
            item = self._inbox.get()
            kind = item[0]
            if kind == "stop":
                return
            try:
                if kind == "msg":
                    msg = item[1]
                    self._rt.add_record(
                        "recv", self.agent.name,
                        performative=msg.performative.value, sender=msg.sender,
                        conversation_id=msg.conversation_id,
                        message_id=msg.message_id, delivered_at=item[2])
                    self.agent.handle_message(self.ctx, msg)
                elif kind == "timer":
                    _, timer_id, payload = item
                    with self._timer_lock:
                        skip = timer_id in self._cancelled
                        self._cancelled.discard(timer_id)
                        self._timers.pop(timer_id, None)
                    if not skip:
                        self.agent.on_timer(self.ctx, timer_id, payload)
                elif kind == "call":
                    item[1](self.agent, self.ctx)
            except Exception as exc:  # a broken handler must not kill the loop
                self._rt.add_record("handler-error", self.agent.name,
                                    error=repr(exc))


class LiveRuntime:
    def __init__(self, address_book: Optional[dict[str, Address]] = None):
        self._agents: dict[str, _AgentLoop] = {}
        self._address_book: dict[str, Address] = dict(address_book or {})
        self._listeners: list[tuple[str, socket.socket]] = []
        self._listen_addrs: dict[str, Address] = {}
        self._routes: dict[str, FrameStream] = {}
        self._outbound: dict[str, FrameStream] = {}
        self._net_lock = threading.Lock()
        self._rec_lock = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._started = False
        self._stopping = False
        self.transcripts: list[dict] = []

    def now(self) -> float:
        return time.time()

    # --- assembly ---

    def add_agent(self, agent: Agent, listen: Optional[Address] = None) -> None:
        if self._started:
            raise RuntimeError("add agents before start()")
        if agent.name in self._agents:
            raise ValueError(f"duplicate agent name: {agent.name}")
        loop = _AgentLoop(self, agent)
        self._agents[agent.name] = loop
        if listen is not None:
            sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            sock.bind(listen)
            sock.listen(64)
            self._listeners.append((agent.name, sock))
            self._listen_addrs[agent.name] = sock.getsockname()[:2]

    def listen_address(self, name: str) -> Address:
        return self._listen_addrs[name]

    def set_address(self, name: str, address: Address) -> None:
        self._address_book[name] = address

    def agent(self, name: str) -> Agent:
        return self._agents[name].agent

    def start(self) -> None:
        self._started = True
        for loop in self._agents.values():
            loop.enqueue(("call", lambda agent, ctx: agent.on_start(ctx)))
            loop.start()
        for name, sock in self._listeners:
            thread = threading.Thread(target=self._accept_loop, args=(sock,),
                                      name=f"accept-{name}", daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stopping = True
        for _, sock in self._listeners:
            try:
                sock.close()
            except OSError:
                pass
        with self._net_lock:
            streams = list(self._routes.values()) + list(self._outbound.values())
            self._routes.clear()
            self._outbound.clear()
        for stream in streams:
            stream.close()
        for loop in self._agents.values():
            loop.stop_timers()
            loop.enqueue(("stop",))
        for loop in self._agents.values():
            loop.join(timeout=5.0)

    # --- calls from outside the loops (ops API, tests) ---

    def post(self, name: str, fn: Callable) -> None:
        self._agents[name].enqueue(("call", fn))

    def call(self, name: str, fn: Callable, timeout: float = 10.0):
        """Run fn(agent, ctx) on the agent's loop and return its result."""
        box: queue.SimpleQueue = queue.SimpleQueue()

        def work(agent: Agent, ctx: _LiveContext) -> None:
            try:
                box.put(("ok", fn(agent, ctx)))
            except Exception as exc:
                box.put(("err", exc))

        self._agents[name].enqueue(("call", work))
        try:
            kind, value = box.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError(f"agent {name} did not answer within {timeout}s")
        if kind == "err":
            raise value
        return value

    # --- transcript ---

    def add_record(self, kind: str, agent: str, **fields) -> None:
        with self._rec_lock:
            self.transcripts.append({"time": time.time(), "type": kind,
                                     "agent": agent, **fields})

    # --- routing ---

    def _route(self, sender: str, msg: AclMessage) -> None:
        self.add_record("send", sender, performative=msg.performative.value,
                        receiver=msg.receiver, conversation_id=msg.conversation_id,
                        message_id=msg.message_id)
        loop = self._agents.get(msg.receiver)
        if loop is not None:
            loop.enqueue(("msg", msg, time.time()))
            return
        if not self._send_remote(msg):
            self.add_record("undeliverable", sender, receiver=msg.receiver,
                            message_id=msg.message_id)

    def _send_remote(self, msg: AclMessage) -> bool:
        frame = encode_message(msg)
        with self._net_lock:
            stream = self._routes.get(msg.receiver)
        if stream is not None:
            try:
                stream.write_raw(frame)
                return True
            except OSError:
                self._drop_stream(stream)
        address = self._address_book.get(msg.receiver)
        if address is None:
            return False
        for _ in range(2):  # one redial after a stale pooled connection
            with self._net_lock:
                stream = self._outbound.get(msg.receiver)
            if stream is None:
                try:
                    stream = connect(address)
                except OSError:
                    return False
                with self._net_lock:
                    self._outbound[msg.receiver] = stream
                reader = threading.Thread(
                    target=self._read_loop, args=(stream,),
                    name=f"read-{msg.receiver}", daemon=True)
                reader.start()
                self._threads.append(reader)
            try:
                stream.write_raw(frame)
                return True
            except OSError:
                self._drop_stream(stream)
        return False

    def _drop_stream(self, stream: FrameStream) -> None:
        with self._net_lock:
            for table in (self._routes, self._outbound):
                stale = [k for k, v in table.items() if v is stream]
                for k in stale:
                    del table[k]
        stream.close()

    # --- TCP plumbing ---

    def _accept_loop(self, sock: socket.socket) -> None:
        while True:
            try:
                conn, _ = sock.accept()
            except OSError:
                return
            stream = FrameStream(conn)
            reader = threading.Thread(target=self._read_loop, args=(stream,),
                                      daemon=True)
            reader.start()
            self._threads.append(reader)

    def _read_loop(self, stream: FrameStream) -> None:
        try:
            while True:
                body = stream.read_frame()
                if body is None:
                    return
                msg = decode_body(body)
                with self._net_lock:
                    self._routes[msg.sender] = stream
                loop = self._agents.get(msg.receiver)
                if loop is None:
                    self.add_record("undeliverable", msg.sender,
                                    receiver=msg.receiver,
                                    message_id=msg.message_id)
                    continue
                loop.enqueue(("msg", msg, time.time()))
        except ProtocolError as exc:
            if not self._stopping:
                self.add_record("protocol-error", "-", error=str(exc))
        except OSError:
            pass
        finally:
            self._drop_stream(stream)
