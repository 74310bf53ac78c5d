"""Blocking socket plumbing for the framed wire protocol.

A FrameStream wraps a connected socket and reads or writes one frame at
a time (4-byte big-endian length prefix plus payload). Orderly EOF
between frames reads as None; EOF inside a frame, a zero-length frame,
or an oversized frame raise ProtocolError, which is connection-fatal.

The same framing carries two payload kinds: agent messages (JSON bodies
decoded by the codec) and the registry's small JSON op dicts.
"""

from __future__ import annotations

import json
import socket
import struct
import threading
from typing import Optional

from ramp.protocol.codec import MAX_FRAME, ProtocolError

_HEADER = struct.Struct("!I")


class FrameStream:
    """One frame in, one frame out, over a connected socket.

    Writes are locked so concurrent senders never interleave frames.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buf = b""
        self._wlock = threading.Lock()

    def read_frame(self) -> Optional[bytes]:
        header = self._read_exact(_HEADER.size)
        if header is None:
            return None
        (length,) = _HEADER.unpack(header)
        if length == 0:
            raise ProtocolError("zero-length frame")
        if length > MAX_FRAME:
            raise ProtocolError(f"frame of {length} bytes exceeds maximum")
        body = self._read_exact(length)
        if body is None:
            raise ProtocolError("connection closed mid-frame")
        return body

    def _read_exact(self, n: int) -> Optional[bytes]:
        while len(self._buf) < n:
            chunk = self._sock.recv(65536)
            if not chunk:
                if not self._buf:
                    return None
                raise ProtocolError("connection closed mid-frame")
            self._buf += chunk
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def write_frame(self, payload: bytes) -> None:
        with self._wlock:
            self._sock.sendall(_HEADER.pack(len(payload)) + payload)

    def write_raw(self, frame: bytes) -> None:
        """Send bytes that already carry their length prefix."""
        with self._wlock:
            self._sock.sendall(frame)

    def write_json(self, obj: dict) -> None:
        self.write_frame(json.dumps(obj, separators=(",", ":")).encode("utf-8"))

    def read_json(self) -> Optional[dict]:
        body = self.read_frame()
        if body is None:
            return None
        try:
            data = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"malformed JSON frame: {exc}") from exc
        if not isinstance(data, dict):
            raise ProtocolError("frame must be a JSON object")
        return data

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def connect(address: tuple[str, int], timeout: float = 5.0) -> FrameStream:
    sock = socket.create_connection(address, timeout=timeout)
    sock.settimeout(None)
    return FrameStream(sock)


def request_response(address: tuple[str, int], payload: dict,
                     timeout: float = 5.0) -> dict:
    """One-shot JSON exchange: connect, send, read one reply, close."""
    stream = connect(address, timeout=timeout)
    try:
        stream._sock.settimeout(timeout)
        stream.write_json(payload)
        reply = stream.read_json()
        if reply is None:
            raise ProtocolError("peer closed without replying")
        return reply
    finally:
        stream.close()
