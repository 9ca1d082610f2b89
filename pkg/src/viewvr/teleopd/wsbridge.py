"""Minimal WebSocket (RFC 6455) server and client for the console bridge.

Only what the bridge needs: text frames, ping/pong, close, fragmented
receive.  Each client gets a bounded outbound queue drained by its own
sender thread, so a slow or stuck consumer loses frames (oldest first)
instead of ever blocking the producer.

The client half exists for tests and tooling; browsers use their native
WebSocket.
"""

from __future__ import annotations

import base64
import collections
import hashlib
import logging
import os
import socket
import struct
import threading
from typing import Callable

log = logging.getLogger(__name__)

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_MESSAGE = 1 << 20  # 1 MiB: nothing on this protocol is remotely close


class WsError(ConnectionError):
    pass


def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head += bytes([mask_bit | n])
    elif n < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if not mask:
        return head + payload
    key = os.urandom(4)
    masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return head + key + masked


class _BufferedSock:
    """Socket reader that honors bytes left over from the HTTP handshake."""

    def __init__(self, sock: socket.socket, leftover: bytes = b""):
        self.sock = sock
        self._buf = leftover

    def recv(self, n: int) -> bytes:
        if self._buf:
            chunk, self._buf = self._buf[:n], self._buf[n:]
            return chunk
        return self.sock.recv(n)

    def sendall(self, data: bytes) -> None:
        self.sock.sendall(data)


def _read_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WsError("connection closed mid-frame")
        buf += chunk
    return buf


def _read_frame(sock: socket.socket) -> tuple[int, bool, bytes]:
    b0, b1 = _read_exact(sock, 2)
    fin = bool(b0 & 0x80)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    n = b1 & 0x7F
    if n == 126:
        (n,) = struct.unpack(">H", _read_exact(sock, 2))
    elif n == 127:
        (n,) = struct.unpack(">Q", _read_exact(sock, 8))
    if n > MAX_MESSAGE:
        raise WsError(f"frame of {n} bytes exceeds limit")
    key = _read_exact(sock, 4) if masked else None
    payload = _read_exact(sock, n) if n else b""
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, fin, payload


def _read_message(sock: socket.socket) -> str | None:
    """One text message (reassembling fragments); None when the peer closes."""
    parts: list[bytes] = []
    while True:
        opcode, fin, payload = _read_frame(sock)
        if opcode == OP_CLOSE:
            return None
        if opcode == OP_PING:
            sock.sendall(_encode_frame(OP_PONG, payload, mask=False))
            continue
        if opcode == OP_PONG:
            continue
        if opcode in (OP_TEXT, OP_CONT):
            parts.append(payload)
            if fin:
                return b"".join(parts).decode("utf-8", errors="replace")
            continue
        raise WsError(f"unsupported opcode {opcode}")


class BridgeClient:
    """One connected console; owns a bounded outbound queue."""

    _ids = 0

    def __init__(self, sock: socket.socket, server: "WebSocketServer", queue_size: int):
        BridgeClient._ids += 1
        self.id = BridgeClient._ids
        self.sock = sock
        self.server = server
        self._queue: collections.deque[str] = collections.deque(maxlen=queue_size)
        self._has_data = threading.Event()
        self._lock = threading.Lock()
        self.closed = False
        self.dropped_frames = 0

    def send(self, text: str) -> None:
        """Queue a message; silently drops the oldest when the queue is full."""
        if self.closed:
            return
        with self._lock:
            if len(self._queue) == self._queue.maxlen:
                self.dropped_frames += 1
            self._queue.append(text)
        self._has_data.set()

    def _sender_loop(self) -> None:
        while not self.closed:
            self._has_data.wait(timeout=0.5)
            while True:
                with self._lock:
                    if not self._queue:
                        self._has_data.clear()
                        break
                    text = self._queue.popleft()
                try:
                    self.sock.sendall(_encode_frame(OP_TEXT, text.encode(), mask=False))
                except OSError:
                    self.close()
                    return

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            try:
                self.sock.close()
            except OSError:
                pass
            self.server._forget(self)


class WebSocketServer:
    """Threaded WebSocket acceptor for line-JSON bridge traffic."""

    def __init__(
        self,
        host: str,
        port: int,
        on_message: Callable[[BridgeClient, str], None],
        on_connect: Callable[[BridgeClient], None] | None = None,
        queue_size: int = 64,
    ):
        self.on_message = on_message
        self.on_connect = on_connect
        self.queue_size = queue_size
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self.port = self._sock.getsockname()[1]
        self._clients: set[BridgeClient] = set()
        self._clients_lock = threading.Lock()
        self._stopping = False
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> "WebSocketServer":
        self._accept_thread.start()
        return self

    def stop(self) -> None:
        self._stopping = True
        try:
            self._sock.close()
        except OSError:
            pass
        for client in self.clients():
            client.close()

    def clients(self) -> list[BridgeClient]:
        with self._clients_lock:
            return list(self._clients)

    def broadcast(self, text: str) -> None:
        for client in self.clients():
            client.send(text)

    def _forget(self, client: BridgeClient) -> None:
        with self._clients_lock:
            self._clients.discard(client)

    def _accept_loop(self) -> None:
        while not self._stopping:
            try:
                sock, _addr = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(sock,), daemon=True).start()

    def _handshake(self, sock: socket.socket) -> bytes | None:
        sock.settimeout(5.0)
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = sock.recv(4096)
            if not chunk or len(data) > 65536:
                return None
            data += chunk
        head, leftover = data.split(b"\r\n\r\n", 1)
        head = head.decode("latin-1")
        lines = head.split("\r\n")
        if not lines[0].startswith("GET "):
            return None
        key = None
        for line in lines[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if key is None:
            return None
        resp = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {_accept_key(key)}\r\n\r\n"
        )
        sock.sendall(resp.encode("latin-1"))
        sock.settimeout(None)
        return leftover

    def _serve_client(self, sock: socket.socket) -> None:
        try:
            leftover = self._handshake(sock)
        except OSError:
            leftover = None
        if leftover is None:
            sock.close()
            return
        reader = _BufferedSock(sock, leftover)
        client = BridgeClient(sock, self, self.queue_size)
        threading.Thread(target=client._sender_loop, daemon=True).start()
        # greet before joining the broadcast set so the first messages a
        # console sees are always hello + dh, never a telemetry frame
        if self.on_connect:
            try:
                self.on_connect(client)
            except Exception:
                log.exception("on_connect callback failed")
        with self._clients_lock:
            self._clients.add(client)
        try:
            while True:
                text = _read_message(reader)
                if text is None:
                    break
                try:
                    self.on_message(client, text)
                except Exception:
                    log.exception("bridge message handler failed")
        except (WsError, OSError):
            pass
        finally:
            client.close()


class WsClient:
    """Blocking WebSocket client (tests and command-line tools)."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode()
        req = (
            f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(req.encode("latin-1"))
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise WsError("server closed during handshake")
            data += chunk
        head, leftover = data.split(b"\r\n\r\n", 1)
        status = head.split(b"\r\n", 1)[0]
        if b"101" not in status:
            raise WsError(f"handshake rejected: {status!r}")
        want = _accept_key(key).encode("latin-1")
        if want not in head:
            raise WsError("bad Sec-WebSocket-Accept")
        self._reader = _BufferedSock(self.sock, leftover)

    def send(self, text: str) -> None:
        self.sock.sendall(_encode_frame(OP_TEXT, text.encode(), mask=True))

    def recv(self) -> str | None:
        return _read_message(self._reader)

    def close(self) -> None:
        try:
            self.sock.sendall(_encode_frame(OP_CLOSE, b"", mask=True))
        except OSError:
            pass
        self.sock.close()
