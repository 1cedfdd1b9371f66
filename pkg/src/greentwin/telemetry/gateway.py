"""Cloud-side ingestion: sessions, the serialized record store and transports.

Store files (written only when the store has a directory):

``records.jsonl``
    one JSON object per stored frame, keys in this order:
    ``device_id`` (str), ``tick`` (int), ``channel`` (str), ``value`` (str,
    the wire text), ``recv_tick`` (int), ``session`` (str), ``quality``
    (``"ok"`` or ``"suspect"``).
``rejects.log``
    one tab-separated line per malformed frame:
    ``recv_tick``, ``session``, reason, raw bytes with non-printables escaped.

All appends go through one lock, so the store's total order is the order
in which frames reach the writer. Within a session that is receive order.
"""

from __future__ import annotations

import json
import os
import socket
import socketserver
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from ..pipeline import StreamCleaner
from .at import TABLE_I_COMMANDS, AtSession, ProtocolError, at_handle
from .frames import MalformedFrame, SensorFrame, decode_frame, encode_frame

DEFAULT_PORT = 8000
PORT_ENV = "GWT_PORT"


def resolve_port(cli_port: int | None = None) -> int:
    """CLI flag, then ``GWT_PORT``, then 8000."""
    if cli_port is not None:
        return int(cli_port)
    env = os.environ.get(PORT_ENV)
    if env:
        return int(env)
    return DEFAULT_PORT


@dataclass(frozen=True)
class StoredRecord:
    device_id: str
    tick: int
    channel: str
    value: str
    recv_tick: int
    session: str
    quality: str = "ok"

    def to_json(self) -> str:
        return json.dumps(
            {
                "device_id": self.device_id,
                "tick": self.tick,
                "channel": self.channel,
                "value": self.value,
                "recv_tick": self.recv_tick,
                "session": self.session,
                "quality": self.quality,
            },
            separators=(", ", ": "),
        )


@dataclass(frozen=True)
class Reject:
    recv_tick: int
    session: str
    reason: str
    raw: bytes

    def to_line(self) -> str:
        raw = self.raw.decode("latin-1").encode("unicode_escape").decode("ascii")
        reason = self.reason.replace("\t", " ").replace("\n", " ")
        return f"{self.recv_tick}\t{self.session}\t{reason}\t{raw}"


class OutlierHook:
    """Tags each reading via a rolling z-score window per (device, channel)."""

    def __init__(self, window: int = 30, threshold: float = 3.0, min_points: int = 8):
        self._cleaner = StreamCleaner(window, threshold, min_points)

    def __call__(self, frame: SensorFrame) -> str:
        _, flagged = self._cleaner.push(f"{frame.device_id}/{frame.channel}", frame.tick, frame.number)
        return "suspect" if flagged else "ok"


class RecordStore:
    """Append-only store with a single serialized writer."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        self.records: list[StoredRecord] = []
        self.rejects: list[Reject] = []
        self._lock = threading.Lock()
        self._changed = threading.Condition(self._lock)
        self._rec_fh = self._rej_fh = None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            self._rec_fh = open(self.directory / "records.jsonl", "w", encoding="ascii", newline="\n")
            self._rej_fh = open(self.directory / "rejects.log", "w", encoding="ascii", newline="\n")

    def append(self, frame: SensorFrame, session: str, clock: Callable[[], int], hook=None) -> StoredRecord:
        with self._lock:
            quality = hook(frame) if hook is not None else "ok"
            rec = StoredRecord(
                frame.device_id, frame.tick, frame.channel, frame.value, int(clock()), session, quality
            )
            self.records.append(rec)
            if self._rec_fh is not None:
                self._rec_fh.write(rec.to_json() + "\n")
            self._changed.notify_all()
            return rec

    def reject(self, raw: bytes, reason: str, session: str, clock: Callable[[], int]) -> Reject:
        with self._lock:
            rej = Reject(int(clock()), session, reason, raw)
            self.rejects.append(rej)
            if self._rej_fh is not None:
                self._rej_fh.write(rej.to_line() + "\n")
            self._changed.notify_all()
            return rej

    def wait_for(self, n_records: int, timeout: float = 5.0) -> bool:
        with self._changed:
            return self._changed.wait_for(lambda: len(self.records) >= n_records, timeout)

    def flush(self) -> None:
        with self._lock:
            for fh in (self._rec_fh, self._rej_fh):
                if fh is not None:
                    fh.flush()

    def close(self) -> None:
        with self._lock:
            for fh in (self._rec_fh, self._rej_fh):
                if fh is not None:
                    fh.close()
            self._rec_fh = self._rej_fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class Gateway:
    """Transport-independent ingestion core.

    ``clock`` supplies ``recv_tick``; without one, the arrival index at the
    writer is used.
    """

    def __init__(self, store: RecordStore, hook=None, clock: Callable[[], int] | None = None):
        self.store = store
        self.hook = hook
        self._clock = clock
        self._sessions = 0
        self._lock = threading.Lock()

    def clock(self) -> int:
        if self._clock is not None:
            return self._clock()
        return len(self.store.records) + len(self.store.rejects)

    def open_session(self) -> "GatewaySession":
        with self._lock:
            self._sessions += 1
            sid = f"s{self._sessions}"
        return GatewaySession(self, sid)


class GatewaySession:
    """Per-connection line buffer; a partial trailing line waits for its newline."""

    def __init__(self, gateway: Gateway, session_id: str):
        self.gateway = gateway
        self.id = session_id
        self._buf = b""

    def feed(self, data: bytes) -> int:
        """Consume bytes; returns how many records were stored."""
        self._buf += data
        stored = 0
        while True:
            nl = self._buf.find(b"\n")
            if nl < 0:
                return stored
            line, self._buf = self._buf[: nl + 1], self._buf[nl + 1 :]
            if self._handle(line):
                stored += 1

    def _handle(self, line: bytes) -> bool:
        g = self.gateway
        try:
            frame = decode_frame(line)
        except MalformedFrame as exc:
            g.store.reject(line, str(exc), self.id, g.clock)
            return False
        g.store.append(frame, self.id, g.clock, g.hook)
        return True

    def close(self) -> None:
        if self._buf:
            g = self.gateway
            g.store.reject(self._buf, "connection closed mid-frame", self.id, g.clock)
            self._buf = b""


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        session = self.server.gateway.open_session()
        try:
            while True:
                data = self.request.recv(4096)
                if not data:
                    break
                session.feed(data)
        finally:
            session.close()


class LiveGateway(socketserver.ThreadingTCPServer):
    """TCP listener; one thread per connection, shared serialized store."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, gateway: Gateway, host: str = "127.0.0.1", port: int | None = None):
        self.gateway = gateway
        super().__init__((host, resolve_port(port)), _Handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "LiveGateway":
        self._thread = threading.Thread(target=self.serve_forever, name="gwt-gateway", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


class DeviceLink:
    """Device side: drives the AT session, then sends frames in transparent mode.

    ``connect(host, port)`` is called on a successful ``AT+CIPSTART`` and
    must return a ``send(bytes)`` callable.
    """

    def __init__(self, connect: Callable[[str, int], Callable[[bytes], None]]):
        self.session = AtSession()
        self.transcript: list[tuple[bytes, bytes]] = []
        self._connect = connect
        self._send: Callable[[bytes], None] | None = None

    def command(self, line: bytes) -> bytes:
        resp, new = at_handle(self.session, line)
        if new.state == "TcpConnected" and self.session.state == "SingleConn":
            self._send = self._connect(*new.peer)
        self.session = new
        self.transcript.append((line, resp))
        return resp

    def handshake(self, host: str, port: int, ssid: str = "xx", password: str = "xxxxxxxx") -> list[bytes]:
        lines = list(TABLE_I_COMMANDS)
        lines[2] = f'AT+CWJAP="{ssid}","{password}"\r\n'.encode("ascii")
        lines[4] = f'AT+CIPSTART="TCP", "{host}", {port}\r\n'.encode("ascii")
        out = [self.command(line) for line in lines]
        if not self.session.transparent:
            raise ProtocolError(f"handshake ended in {self.session.state}")
        return out

    def send_frame(self, frame: SensorFrame) -> None:
        self.send_raw(encode_frame(frame))

    def send_raw(self, data: bytes) -> None:
        if not self.session.transparent or self._send is None:
            raise ProtocolError("not in transparent mode")
        self._send(data)


def loopback_connect(gateway: Gateway) -> Callable[[str, int], Callable[[bytes], None]]:
    """In-process transport: bytes go straight into a gateway session."""

    def connect(host: str, port: int):
        return gateway.open_session().feed

    return connect


def tcp_connect(host: str, port: int) -> Callable[[bytes], None]:
    sock = socket.create_connection((host, port), timeout=5.0)

    def send(data: bytes) -> None:
        sock.sendall(data)

    send.close = sock.close  # type: ignore[attr-defined]
    return send


__all__ = [
    "DEFAULT_PORT",
    "DeviceLink",
    "Gateway",
    "GatewaySession",
    "LiveGateway",
    "OutlierHook",
    "PORT_ENV",
    "RecordStore",
    "Reject",
    "StoredRecord",
    "loopback_connect",
    "resolve_port",
    "tcp_connect",
]
