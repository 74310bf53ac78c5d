"""Resource discovery: registration, heartbeats, liveness.

The registry holds one entry per resource id. An entry is alive iff its
last heartbeat is within 3 heartbeat intervals; `list` returns alive
entries only. Re-registering under the same id supersedes the old
address, which is also how a resource recovers after expiry.

RegistryCore is transport-free (time is always passed in), so the same
logic serves the virtual runtime via LocalRegistryHandle and the
networked deployment via RegistryServer/RegistryClient, which speak
length-prefixed JSON ops over TCP.
"""

from __future__ import annotations

import socketserver
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from ramp.protocol.codec import ProtocolError
from ramp.protocol.transport import FrameStream, request_response

Address = tuple[str, int]

DEFAULT_HEARTBEAT_INTERVAL = 5.0
LIVENESS_INTERVALS = 3


@dataclass
class RegistryEntry:
    resource_id: str
    address: Optional[Address]
    last_heartbeat: float
    attractiveness: Optional[str] = None  # latest sample, money string

    def alive(self, now: float, interval: float) -> bool:
        return now - self.last_heartbeat <= LIVENESS_INTERVALS * interval

    def view(self, now: float, interval: float) -> dict:
        return {
            "resource_id": self.resource_id,
            "address": list(self.address) if self.address else None,
            "last_heartbeat": self.last_heartbeat,
            "alive": self.alive(now, interval),
            "attractiveness": self.attractiveness,
        }


class RegistryCore:
    def __init__(self, heartbeat_interval: float = DEFAULT_HEARTBEAT_INTERVAL):
        self.heartbeat_interval = heartbeat_interval
        self._entries: dict[str, RegistryEntry] = {}
        self._lock = threading.Lock()

    def register(self, resource_id: str, address: Optional[Address],
                 now: float, attractiveness: Optional[str] = None) -> None:
        with self._lock:
            self._entries[resource_id] = RegistryEntry(
                resource_id=resource_id, address=address,
                last_heartbeat=now, attractiveness=attractiveness)

    def heartbeat(self, resource_id: str, now: float,
                  attractiveness: Optional[str] = None) -> bool:
        with self._lock:
            entry = self._entries.get(resource_id)
            if entry is None:
                return False
            entry.last_heartbeat = now
            if attractiveness is not None:
                entry.attractiveness = attractiveness
            return True

    def list_alive(self, now: float) -> list[dict]:
        with self._lock:
            entries = list(self._entries.values())
        interval = self.heartbeat_interval
        return [e.view(now, interval) for e in sorted(entries, key=lambda e: e.resource_id)
                if e.alive(now, interval)]

    def entries(self, now: float) -> list[dict]:
        with self._lock:
            entries = list(self._entries.values())
        return [e.view(now, self.heartbeat_interval)
                for e in sorted(entries, key=lambda e: e.resource_id)]


class LocalRegistryHandle:
    """In-process registry access with an injected clock (virtual runs)."""

    def __init__(self, core: RegistryCore, now: Callable[[], float]):
        self._core = core
        self._now = now

    def register(self, resource_id: str, address: Optional[Address] = None,
                 attractiveness: Optional[str] = None) -> None:
        self._core.register(resource_id, address, self._now(), attractiveness)

    def heartbeat(self, resource_id: str,
                  attractiveness: Optional[str] = None) -> bool:
        return self._core.heartbeat(resource_id, self._now(), attractiveness)

    def list_alive(self) -> list[dict]:
        return self._core.list_alive(self._now())

    @property
    def heartbeat_interval(self) -> float:
        return self._core.heartbeat_interval


class _RegistryRequestHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        core: RegistryCore = self.server.core  # type: ignore[attr-defined]
        stream = FrameStream(self.request)
        try:
            while True:
                op = stream.read_json()
                if op is None:
                    return
                stream.write_json(self._answer(core, op))
        except (ProtocolError, OSError):
            return

    @staticmethod
    def _answer(core: RegistryCore, op: dict) -> dict:
        kind = op.get("op")
        if kind == "register":
            address = op.get("address")
            core.register(op["resource_id"],
                          tuple(address) if address else None,
                          time.time(), op.get("attractiveness"))
            return {"ok": True}
        if kind == "heartbeat":
            known = core.heartbeat(op["resource_id"], time.time(),
                                   op.get("attractiveness"))
            return {"ok": known} if known else \
                {"ok": False, "error": "unknown resource_id"}
        if kind == "list":
            return {"ok": True, "entries": core.list_alive(time.time())}
        return {"ok": False, "error": f"unknown op: {kind!r}"}


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class RegistryServer:
    """TCP front for a RegistryCore on the wall clock."""

    def __init__(self, address: Address = ("127.0.0.1", 7703),
                 heartbeat_interval: float = DEFAULT_HEARTBEAT_INTERVAL):
        self.core = RegistryCore(heartbeat_interval)
        self._server = _Server(address, _RegistryRequestHandler)
        self._server.core = self.core  # type: ignore[attr-defined]
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> Address:
        return self._server.server_address[:2]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="registry", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def serve_forever(self) -> None:
        self._server.serve_forever()


class RegistryClient:
    """Stateless client: one connection per call."""

    def __init__(self, address: Address, timeout: float = 5.0,
                 heartbeat_interval: float = DEFAULT_HEARTBEAT_INTERVAL):
        self._address = address
        self._timeout = timeout
        # must match the server's configured interval
        self.heartbeat_interval = heartbeat_interval

    def register(self, resource_id: str, address: Optional[Address] = None,
                 attractiveness: Optional[str] = None) -> None:
        self._call({"op": "register", "resource_id": resource_id,
                    "address": list(address) if address else None,
                    "attractiveness": attractiveness})

    def heartbeat(self, resource_id: str,
                  attractiveness: Optional[str] = None) -> bool:
        reply = request_response(self._address,
                                 {"op": "heartbeat", "resource_id": resource_id,
                                  "attractiveness": attractiveness},
                                 timeout=self._timeout)
        return bool(reply.get("ok"))

    def list_alive(self) -> list[dict]:
        reply = self._call({"op": "list"})
        return [{**e, "address": tuple(e["address"]) if e["address"] else None}
                for e in reply["entries"]]

    def _call(self, op: dict) -> dict:
        reply = request_response(self._address, op, timeout=self._timeout)
        if not reply.get("ok"):
            raise RuntimeError(f"registry refused {op.get('op')}: "
                               f"{reply.get('error')}")
        return reply
