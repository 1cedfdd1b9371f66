"""Transparent-mode payload: one ASCII CSV line per reading.

Wire form: ``device_id,tick,channel,value\\n``. ``value`` travels as decimal
text and is stored as the same text, so replayed values stay string-equal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

_TOKEN = re.compile(r"[A-Za-z0-9_.:-]+")
_DECIMAL = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_TICK = re.compile(r"[0-9]+")


class MalformedFrame(ValueError):
    pass


@dataclass(frozen=True)
class SensorFrame:
    device_id: str
    tick: int
    channel: str
    value: str

    def __post_init__(self):
        for name in ("device_id", "channel"):
            tok = getattr(self, name)
            if not isinstance(tok, str) or not _TOKEN.fullmatch(tok):
                raise MalformedFrame(f"bad {name} token {tok!r}")
        if isinstance(self.tick, bool) or not isinstance(self.tick, int) or self.tick < 0:
            raise MalformedFrame(f"tick must be a non-negative integer, got {self.tick!r}")
        v = self.value
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = repr(float(v))
            object.__setattr__(self, "value", v)
        if not isinstance(v, str) or not _DECIMAL.fullmatch(v):
            raise MalformedFrame(f"value is not decimal text: {v!r}")
        if not math.isfinite(float(v)):
            raise MalformedFrame(f"value is not finite: {v!r}")

    @property
    def number(self) -> float:
        return float(self.value)


def encode_frame(f: SensorFrame) -> bytes:
    return f"{f.device_id},{f.tick},{f.channel},{f.value}\n".encode("ascii")


def decode_frame(line: bytes) -> SensorFrame:
    """Decode one newline-terminated line (CRLF tolerated)."""
    if not line.endswith(b"\n"):
        raise MalformedFrame("frame is not newline-terminated")
    body = line[:-1]
    if body.endswith(b"\r"):
        body = body[:-1]
    if b"\n" in body:
        raise MalformedFrame("more than one line")
    try:
        text = body.decode("ascii")
    except UnicodeDecodeError:
        raise MalformedFrame("non-ASCII bytes") from None
    parts = text.split(",")
    if len(parts) != 4:
        raise MalformedFrame(f"expected 4 fields, got {len(parts)}")
    device_id, tick, channel, value = parts
    if not _TICK.fullmatch(tick):
        raise MalformedFrame(f"tick is not an integer: {tick!r}")
    return SensorFrame(device_id, int(tick), channel, value)


__all__ = ["MalformedFrame", "SensorFrame", "decode_frame", "encode_frame"]
