"""Registry: liveness windows, supersession, TCP op protocol."""

import socket
import struct

import pytest

from ramp.harness.registry import (
    LocalRegistryHandle,
    RegistryClient,
    RegistryCore,
    RegistryServer,
)


def ids(entries):
    return [e["resource_id"] for e in entries]


def test_register_twenty_then_list():
    core = RegistryCore(heartbeat_interval=5.0)
    for i in range(20):
        core.register(f"r{i:02d}", None, now=0.0)
    assert len(core.list_alive(now=0.0)) == 20


def test_silence_expires_after_three_intervals():
    core = RegistryCore(heartbeat_interval=5.0)
    core.register("quiet", None, now=0.0)
    core.register("noisy", None, now=0.0)
    for t in (5.0, 10.0, 15.0, 20.0):
        core.heartbeat("noisy", now=t)
    assert ids(core.list_alive(now=15.0)) == ["noisy", "quiet"]  # boundary: 3 intervals
    assert ids(core.list_alive(now=15.1)) == ["noisy"]
    assert ids(core.list_alive(now=20.0)) == ["noisy"]


def test_reregister_after_expiry_revives():
    core = RegistryCore(heartbeat_interval=1.0)
    core.register("r", None, now=0.0)
    assert not core.list_alive(now=10.0)
    core.register("r", None, now=10.0)
    assert ids(core.list_alive(now=10.0)) == ["r"]


def test_reregister_supersedes_address():
    core = RegistryCore()
    core.register("r", ("10.0.0.1", 7701), now=0.0)
    core.register("r", ("10.0.0.2", 7799), now=1.0)
    (entry,) = core.list_alive(now=1.0)
    assert entry["address"] == ["10.0.0.2", 7799]


def test_heartbeat_unknown_id_reports_false():
    core = RegistryCore()
    assert core.heartbeat("stranger", now=0.0) is False


def test_heartbeat_carries_attractiveness_sample():
    core = RegistryCore()
    core.register("r", None, now=0.0)
    core.heartbeat("r", now=1.0, attractiveness="16.67")
    (entry,) = core.list_alive(now=1.0)
    assert entry["attractiveness"] == "16.67"


def test_local_handle_uses_injected_clock():
    core = RegistryCore(heartbeat_interval=1.0)
    clock = {"t": 0.0}
    handle = LocalRegistryHandle(core, now=lambda: clock["t"])
    handle.register("r")
    clock["t"] = 2.0
    assert ids(handle.list_alive()) == ["r"]
    clock["t"] = 3.5
    assert handle.list_alive() == []
    assert handle.heartbeat("r") is True
    assert ids(handle.list_alive()) == ["r"]


@pytest.fixture
def server():
    srv = RegistryServer(("127.0.0.1", 0), heartbeat_interval=5.0)
    srv.start()
    yield srv
    srv.stop()


def test_tcp_register_heartbeat_list(server):
    client = RegistryClient(server.address)
    client.register("atlas1", ("127.0.0.1", 7701))
    client.register("ricc1", None)
    assert client.heartbeat("atlas1", attractiveness="2.00") is True
    assert client.heartbeat("never-registered") is False
    entries = {e["resource_id"]: e for e in client.list_alive()}
    assert set(entries) == {"atlas1", "ricc1"}
    assert entries["atlas1"]["address"] == ("127.0.0.1", 7701)
    assert entries["atlas1"]["attractiveness"] == "2.00"
    assert entries["ricc1"]["address"] is None


def test_tcp_unknown_op_is_refused(server):
    client = RegistryClient(server.address)
    with pytest.raises(RuntimeError, match="unknown op"):
        client._call({"op": "drop-tables"})


def test_tcp_persistent_connection_multiple_ops(server):
    sock = socket.create_connection(server.address, timeout=2.0)
    from ramp.protocol.transport import FrameStream
    stream = FrameStream(sock)
    stream.write_json({"op": "register", "resource_id": "r1", "address": None})
    assert stream.read_json() == {"ok": True}
    stream.write_json({"op": "list"})
    reply = stream.read_json()
    assert reply["ok"] and ids(reply["entries"]) == ["r1"]
    stream.close()


def test_tcp_garbage_frame_drops_connection(server):
    sock = socket.create_connection(server.address, timeout=2.0)
    sock.sendall(struct.pack("!I", 0))  # zero-length frame is protocol-fatal
    assert sock.recv(1024) == b""
    sock.close()
    # the server itself is still fine
    client = RegistryClient(server.address)
    client.register("still-here", None)
    assert ids(client.list_alive()) == ["still-here"]
