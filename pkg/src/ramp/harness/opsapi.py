"""HTTP/JSON operations API: the façade the web console talks to.

Read endpoints return immutable snapshots taken on the owning agent's
loop; state-changing endpoints are translated to events on that loop, so
the API can never observe or create a half-applied transition. The
server itself holds no market state.

Routes:
  GET  /auctions                      all auction snapshots
  GET  /auctions/{id}                 one auction (rounds, offers, phase)
  POST /auctions                      body {rfql, config} -> 201 auction_id
  POST /auctions/{id}/units/{u}/approve   body {decision: accept|reject}
  GET  /reservations                  purchased reservations
  POST /reservations/{id}/cancel      -> 202, re-credit arrives async
  GET  /accounts/{id}                 bank balance + recent entries
  GET  /resources                     registry view with attractiveness
"""

from __future__ import annotations

import json
import re
import threading
from urllib.parse import unquote
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from ramp.agents.user import AuctionConfig, UserAgent
from ramp.rfql.xmlio import RfqlParseError, RfqlValidationError, parse_rfq

Address = tuple[str, int]

_APPROVE = re.compile(r"^/auctions/([^/]+)/units/(\d+)/approve$")
_AUCTION = re.compile(r"^/auctions/([^/]+)$")
_CANCEL = re.compile(r"^/reservations/([^/]+)/cancel$")
_ACCOUNT = re.compile(r"^/accounts/([^/]+)$")

CONFIG_KEYS = ("rounds", "round_interval", "approval_mode",
               "accept_timeout", "confirm_timeout", "confirm_retry_interval")


class OpsServer:
    """Serves the ops API for one user agent within a running market.

    `rt` must provide call(name, fn) scheduling fn(agent, ctx) on the
    named agent's loop and returning its result (the live runtime does).
    """

    def __init__(self, rt, user: str, bank: str = "bank", registry=None):
        self.rt = rt
        self.user = user
        self.bank = bank
        self.registry = registry
        self._httpd: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    # --- lifecycle ---

    def start(self, address: Address = ("127.0.0.1", 0)) -> Address:
        ops = self

        class Handler(_OpsHandler):
            server_ops = ops

        self._httpd = ThreadingHTTPServer(address, Handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        name="ops-api", daemon=True)
        self._thread.start()
        return self._httpd.server_address[:2]

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    # --- endpoint logic (status, payload) ---

    def handle(self, method: str, path: str, body: Optional[dict]) -> tuple[int, dict]:
        if method == "GET" and path == "/auctions":
            snaps = self.rt.call(self.user,
                                 lambda a, ctx: a.snapshots())
            return 200, {"auctions": snaps}
        if method == "GET" and (m := _AUCTION.match(path)):
            snap = self.rt.call(self.user,
                                lambda a, ctx, i=unquote(m.group(1)): a.snapshot(i))
            if snap is None:
                return 404, {"error": "unknown auction"}
            return 200, snap
        if method == "POST" and path == "/auctions":
            return self._start_auction(body or {})
        if method == "POST" and (m := _APPROVE.match(path)):
            return self._approve(unquote(m.group(1)), int(m.group(2)), body or {})
        if method == "GET" and path == "/reservations":
            rows = self.rt.call(self.user, lambda a, ctx: a.purchases())
            return 200, {"reservations": rows}
        if method == "POST" and (m := _CANCEL.match(path)):
            return self._cancel(unquote(m.group(1)))
        if method == "GET" and (m := _ACCOUNT.match(path)):
            return self._account(unquote(m.group(1)))
        if method == "GET" and path == "/resources":
            if self.registry is None:
                return 200, {"resources": []}
            return 200, {"resources": self.registry.list_alive()}
        return 404, {"error": "not found"}

    def _start_auction(self, body: dict) -> tuple[int, dict]:
        text = body.get("rfql")
        if not isinstance(text, str):
            return 400, {"error": "body must carry an rfql document"}
        try:
            doc = parse_rfq(text)
        except (RfqlParseError, RfqlValidationError) as exc:
            return 400, {"error": str(exc)}
        raw = body.get("config") or {}
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            return 400, {"error": f"unknown config keys: {sorted(unknown)}"}
        try:
            cfg = AuctionConfig(**raw)
            auction_id = self.rt.call(
                self.user,
                lambda a, ctx: a.start_auction(ctx, doc, cfg))
        except (TypeError, ValueError) as exc:
            return 400, {"error": str(exc)}
        return 201, {"auction_id": auction_id}

    def _approve(self, auction_id: str, unit: int,
                 body: dict) -> tuple[int, dict]:
        decision = body.get("decision")
        if decision not in ("accept", "reject"):
            return 400, {"error": "decision must be accept or reject"}

        def work(agent: UserAgent, ctx):
            agent.approve(ctx, auction_id, unit, decision == "accept")

        try:
            self.rt.call(self.user, work)
        except ValueError as exc:
            status = 404 if str(exc).startswith("unknown") else 409
            return status, {"error": str(exc)}
        return 200, {"auction_id": auction_id, "unit": unit,
                     "decision": decision}

    def _cancel(self, reservation_id: str) -> tuple[int, dict]:
        def work(agent: UserAgent, ctx):
            agent.cancel_purchase(ctx, reservation_id)

        try:
            self.rt.call(self.user, work)
        except ValueError as exc:
            status = 404 if str(exc).startswith("unknown") else 409
            return status, {"error": str(exc)}
        return 202, {"reservation_id": reservation_id,
                     "status": "cancel-requested"}

    def _account(self, principal: str) -> tuple[int, dict]:
        def work(agent, ctx):
            if principal not in agent.core.balances:
                return None
            return agent.core.statement(principal)

        statement = self.rt.call(self.bank, work)
        if statement is None:
            return 404, {"error": "unknown account"}
        return 200, statement


class _OpsHandler(BaseHTTPRequestHandler):
    server_ops: OpsServer

    def log_message(self, fmt, *args):  # tests need quiet servers
        pass

    def _reply(self, status: int, payload: dict) -> None:
        data = json.dumps(payload, default=str).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _body(self) -> Optional[dict]:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return None
        raw = self.rfile.read(length)
        data = json.loads(raw.decode())
        if not isinstance(data, dict):
            raise ValueError("body must be a JSON object")
        return data

    def _dispatch(self, method: str) -> None:
        try:
            body = self._body() if method == "POST" else None
        except (ValueError, UnicodeDecodeError) as exc:
            self._reply(400, {"error": f"bad request body: {exc}"})
            return
        try:
            status, payload = self.server_ops.handle(method, self.path, body)
        except TimeoutError:
            self._reply(503, {"error": "agent did not answer"})
            return
        except Exception as exc:
            self._reply(500, {"error": repr(exc)})
            return
        self._reply(status, payload)

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")


def run_ops_api(address: Address, rt, user: str, bank: str = "bank",
                registry=None) -> OpsServer:
    """Start the API on `address`; returns the running server."""
    server = OpsServer(rt, user, bank=bank, registry=registry)
    server.start(address)
    return server
