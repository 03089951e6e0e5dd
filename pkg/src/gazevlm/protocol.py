"""Wire protocol for the HUD simulator: tagged key=value text records.

A record is one line: a one-word tag followed by ``key=value`` pairs with
percent-encoded values, e.g. ``gaze u=0.5 v=0.25``. Over a raw byte
stream, records are length-prefixed (ASCII decimal byte count, newline,
payload); over WebSocket each text frame carries exactly one record, the
frame itself being the length prefix. Protocol version is announced in
the hello record as ``proto=1``.
"""

from __future__ import annotations

from urllib.parse import quote, unquote

PROTO_VERSION = 1

CLIENT_TAGS = {"hello", "gaze", "slider", "trigger", "mode", "query", "mic_script", "clear"}
SERVER_TAGS = {
    "hello", "window", "capture", "mic_open", "partial", "committed",
    "token", "answer", "busy", "error",
}


class ProtocolError(Exception):
    pass


def encode_message(tag: str, **fields) -> str:
    if " " in tag or not tag:
        raise ProtocolError(f"invalid tag {tag!r}")
    parts = [tag]
    for key, value in fields.items():
        parts.append(f"{key}={quote(str(value), safe='')}")
    return " ".join(parts)


def parse_message(record: str) -> tuple[str, dict[str, str]]:
    parts = record.strip().split(" ")
    if not parts or not parts[0]:
        raise ProtocolError("empty record")
    tag = parts[0]
    fields: dict[str, str] = {}
    for part in parts[1:]:
        if "=" not in part:
            raise ProtocolError(f"malformed field {part!r} in {record!r}")
        key, _, value = part.partition("=")
        fields[key] = unquote(value)
    return tag, fields


def encode_frame(record: str) -> bytes:
    """Length-prefix a record for a raw byte stream."""
    payload = record.encode("utf-8")
    return f"{len(payload)}\n".encode("ascii") + payload


def decode_frames(buffer: bytes) -> tuple[list[str], bytes]:
    """Extract complete records from ``buffer``; returns (records, remainder)."""
    records: list[str] = []
    while True:
        newline = buffer.find(b"\n")
        if newline < 0:
            break
        try:
            length = int(buffer[:newline])
        except ValueError as exc:
            raise ProtocolError(f"bad length prefix {buffer[:newline]!r}") from exc
        start = newline + 1
        if len(buffer) < start + length:
            break
        records.append(buffer[start : start + length].decode("utf-8"))
        buffer = buffer[start + length :]
    return records, buffer
