"""Device-side AT command session of an ESP8266-class Wi-Fi module.

The session follows one linear state graph, one command per edge::

    Idle --AT+CWMODE=1--> StaModeSet --AT+RST--> Restarted
         --AT+CWJAP="ssid","pwd"--> Joined --AT+CIPMUX=0--> SingleConn
         --AT+CIPSTART="TCP","host",port--> TcpConnected
         --AT+CIPMODE=1--> TransparentArmed --AT+CIPSEND--> Transparent

Responses (bytes on the wire):

=========================== ==========================
accepted command            ``OK\\r\\n``
accepted ``AT+RST``         ``OK\\r\\nready\\r\\n``
accepted ``AT+CIPSEND``     ``>``
anything else               ``ERROR\\r\\n`` (state unchanged)
=========================== ==========================

Command lines end with CRLF. Spaces are allowed after the commas of
``AT+CIPSTART`` and ``AT+CWJAP``. Any non-empty ssid and password are
accepted and recorded. In Transparent mode lines are payload, not commands;
the bare ``+++`` escape (no line ending) returns the session to
TcpConnected with an empty response.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

STATES = (
    "Idle",
    "StaModeSet",
    "Restarted",
    "Joined",
    "SingleConn",
    "TcpConnected",
    "TransparentArmed",
    "Transparent",
)

OK = b"OK\r\n"
READY = b"OK\r\nready\r\n"
PROMPT = b">"
ERROR = b"ERROR\r\n"
ESCAPE = b"+++"

# the command column, in order
TABLE_I_COMMANDS = (
    b'AT+CWMODE=1\r\n',
    b'AT+RST\r\n',
    b'AT+CWJAP="xx","xxxxxxxx"\r\n',
    b'AT+CIPMUX=0\r\n',
    b'AT+CIPSTART="TCP", "192.168.1.XXX", 8000\r\n',
    b'AT+CIPMODE=1\r\n',
    b'AT+CIPSEND\r\n',
)
TABLE_I_RESPONSES = (OK, READY, OK, OK, OK, OK, PROMPT)

_CWJAP = re.compile(r'AT\+CWJAP="([^"]+)", *"([^"]+)"')
_CIPSTART = re.compile(r'AT\+CIPSTART="TCP", *"([^",]+)", *([0-9]{1,5})')


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class AtSession:
    state: str = "Idle"
    ssid: str | None = None
    password: str | None = None
    peer: tuple[str, int] | None = None

    def __post_init__(self):
        if self.state not in STATES:
            raise ValueError(f"unknown AT state {self.state!r}")

    @property
    def transparent(self) -> bool:
        return self.state == "Transparent"


def _parse(cmd: str):
    """``(required state, next state, response, extra fields)`` or None."""
    if cmd == "AT+CWMODE=1":
        return "Idle", "StaModeSet", OK, {}
    if cmd == "AT+RST":
        return "StaModeSet", "Restarted", READY, {}
    if cmd == "AT+CIPMUX=0":
        return "Joined", "SingleConn", OK, {}
    if cmd == "AT+CIPMODE=1":
        return "TcpConnected", "TransparentArmed", OK, {}
    if cmd == "AT+CIPSEND":
        return "TransparentArmed", "Transparent", PROMPT, {}
    m = _CWJAP.fullmatch(cmd)
    if m:
        return "Restarted", "Joined", OK, {"ssid": m.group(1), "password": m.group(2)}
    m = _CIPSTART.fullmatch(cmd)
    if m:
        port = int(m.group(2))
        if not 0 < port < 65536:
            return None
        return "SingleConn", "TcpConnected", OK, {"peer": (m.group(1), port)}
    return None


def at_handle(s: AtSession, line: bytes) -> tuple[bytes, AtSession]:
    """Process one command line and return ``(response, new session)``."""
    if s.state == "Transparent":
        if line == ESCAPE:
            return b"", replace(s, state="TcpConnected")
        raise ProtocolError("session is in transparent mode; bytes are payload")
    if not line.endswith(b"\r\n"):
        return ERROR, s
    try:
        cmd = line[:-2].decode("ascii")
    except UnicodeDecodeError:
        return ERROR, s
    parsed = _parse(cmd)
    if parsed is None:
        return ERROR, s
    required, nxt, resp, extra = parsed
    if s.state != required:
        return ERROR, s
    return resp, replace(s, state=nxt, **extra)


def run_commands(lines, s: AtSession | None = None) -> tuple[list[bytes], AtSession]:
    s = AtSession() if s is None else s
    out = []
    for line in lines:
        resp, s = at_handle(s, line)
        out.append(resp)
    return out, s


__all__ = [
    "AtSession",
    "ERROR",
    "ESCAPE",
    "OK",
    "PROMPT",
    "ProtocolError",
    "READY",
    "STATES",
    "TABLE_I_COMMANDS",
    "TABLE_I_RESPONSES",
    "at_handle",
    "run_commands",
]
