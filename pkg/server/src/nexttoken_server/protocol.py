"""Wire protocol primitives.

Frames are a 4-byte big-endian length followed by UTF-8 JSON. Probability
weights are rounded to 9 significant digits before serialization so a given
model state always produces byte-identical responses.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

FRAME_HEADER = struct.Struct(">I")

#: Upper bound on a single frame; larger declared lengths end the connection.
MAX_FRAME_BYTES = 16 * 1024 * 1024


class FramingError(Exception):
    """The byte stream cannot be resynchronized; close the connection."""


def dumps(obj: dict) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


def encode_frame(obj: dict) -> bytes:
    payload = dumps(obj)
    return FRAME_HEADER.pack(len(payload)) + payload


def format_probs(probs) -> list[float]:
    """Round to 9 significant digits; the rounded values serialize stably."""
    return [float(f"{float(p):.9g}") for p in probs]


def read_frame(stream: BinaryIO) -> bytes | None:
    """Read one frame payload; None on clean end of stream."""
    header = _read_exactly(stream, FRAME_HEADER.size)
    if header is None:
        return None
    (length,) = FRAME_HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise FramingError(f"frame of {length} bytes exceeds limit")
    payload = _read_exactly(stream, length)
    if payload is None and length > 0:
        raise FramingError("stream ended mid-frame")
    return payload if payload is not None else b""


def write_frame(stream: BinaryIO, obj: dict) -> None:
    stream.write(encode_frame(obj))
    stream.flush()


def _read_exactly(stream: BinaryIO, n: int) -> bytes | None:
    """n bytes, None on end-of-stream before the first byte; a stream that
    dies mid-read is a framing error."""
    data = b""
    while len(data) < n:
        chunk = stream.read(n - len(data))
        if not chunk:
            if not data:
                return None
            raise FramingError("stream ended mid-frame")
        data += chunk
    return data
