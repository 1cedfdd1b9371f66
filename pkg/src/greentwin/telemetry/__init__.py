"""AT-command session emulation, frame codec and the ingestion gateway."""

from .at import AtSession, ProtocolError, TABLE_I_COMMANDS, TABLE_I_RESPONSES, at_handle, run_commands
from .frames import MalformedFrame, SensorFrame, decode_frame, encode_frame
from .gateway import (
    DEFAULT_PORT,
    DeviceLink,
    Gateway,
    LiveGateway,
    OutlierHook,
    RecordStore,
    StoredRecord,
    loopback_connect,
    resolve_port,
    tcp_connect,
)

__all__ = [
    "AtSession",
    "DEFAULT_PORT",
    "DeviceLink",
    "Gateway",
    "LiveGateway",
    "MalformedFrame",
    "OutlierHook",
    "ProtocolError",
    "RecordStore",
    "SensorFrame",
    "StoredRecord",
    "TABLE_I_COMMANDS",
    "TABLE_I_RESPONSES",
    "at_handle",
    "decode_frame",
    "encode_frame",
    "loopback_connect",
    "resolve_port",
    "run_commands",
    "tcp_connect",
]
