"""Two-stream container: one file holding a text bitstream and an opaque
image payload, plus the metadata a decoder needs to run deterministically.

Layout (all integers little-endian):

    offset  size  field
    0       4     magic "RKCF"
    4       4     format_version (u32)
    8       1     backend_id (u8, Backend enum)
    9       4     vocab_size (u32)
    13      8     token_count (u64)
    21      8     text_bit_length (u64)
    29      8     text_payload_bytes (u64)
    37      8     image_payload_bytes (u64)
    45      4     width (u32, 0 = unknown)
    49      4     height (u32, 0 = unknown)
    53      2+n   predictor_id (u16 length + UTF-8)
    ...     2+m   vocab_identifier (u16 length + UTF-8)
    ...           text payload, then image payload

The image payload is opaque: it is stored and accounted for, never parsed.
The predictor_id doubles as the pipeline switch on decode: "none" means the
text payload codes tokens directly, anything else names the model whose
ranks (deflate/huffman backends) or distributions (arithmetic backend)
produced the payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .entropy_coding import Backend, Bitstream
from .errors import InvalidHeader, NotAContainer, Truncated, UnsupportedVersion

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "PREDICTOR_NONE",
    "ContainerHeader",
    "ContainerFile",
    "mux",
    "demux",
    "bits_per_pixel",
]

MAGIC = b"RKCF"
FORMAT_VERSION = 1

#: predictor_id for payloads coded without any model (no rank transform).
PREDICTOR_NONE = "none"

_FIXED = struct.Struct("<4sIBIQQQQII")


@dataclass(frozen=True)
class ContainerHeader:
    format_version: int
    backend: Backend
    predictor_id: str
    vocab_identifier: str
    vocab_size: int
    token_count: int
    text_bit_length: int
    text_payload_bytes: int
    image_payload_bytes: int
    width: int = 0
    height: int = 0


@dataclass(frozen=True)
class ContainerFile:
    header: ContainerHeader
    text_payload: Bitstream
    image_payload: bytes

    def to_bytes(self) -> bytes:
        h = self.header
        pred = h.predictor_id.encode("utf-8")
        vocab = h.vocab_identifier.encode("utf-8")
        fixed = _FIXED.pack(
            MAGIC,
            h.format_version,
            int(h.backend),
            h.vocab_size,
            h.token_count,
            h.text_bit_length,
            h.text_payload_bytes,
            h.image_payload_bytes,
            h.width,
            h.height,
        )
        return b"".join(
            (
                fixed,
                struct.pack("<H", len(pred)),
                pred,
                struct.pack("<H", len(vocab)),
                vocab,
                self.text_payload.data,
                self.image_payload,
            )
        )


def mux(
    *,
    backend: Backend,
    predictor_id: str,
    vocab_identifier: str,
    vocab_size: int,
    token_count: int,
    text: Bitstream,
    image: bytes = b"",
    width: int = 0,
    height: int = 0,
) -> ContainerFile:
    """Assemble a container; raises InvalidHeader on inconsistent fields."""
    if vocab_size < 2:
        raise InvalidHeader(f"vocab_size {vocab_size} below minimum of 2")
    if token_count < 0:
        raise InvalidHeader("token_count must be non-negative")
    if text.backend != backend:
        raise InvalidHeader(
            f"bitstream backend {text.backend.name} does not match declared {backend.name}"
        )
    if (width == 0) != (height == 0):
        raise InvalidHeader("width and height must be given together")
    if not predictor_id or not vocab_identifier:
        raise InvalidHeader("predictor_id and vocab_identifier must be non-empty")
    header = ContainerHeader(
        format_version=FORMAT_VERSION,
        backend=backend,
        predictor_id=predictor_id,
        vocab_identifier=vocab_identifier,
        vocab_size=vocab_size,
        token_count=token_count,
        text_bit_length=text.bit_length,
        text_payload_bytes=len(text.data),
        image_payload_bytes=len(image),
        width=width,
        height=height,
    )
    return ContainerFile(header, text, bytes(image))


def demux(data: bytes) -> ContainerFile:
    """Parse container bytes. Total on arbitrary input: every byte string
    yields a ContainerFile or one of NotAContainer, Truncated,
    UnsupportedVersion, InvalidHeader."""
    if data[:4] != MAGIC:
        if len(data) < 4 and MAGIC.startswith(data):
            raise Truncated(f"file ends inside the {len(MAGIC)}-byte magic")
        raise NotAContainer("bad magic")
    if len(data) < _FIXED.size:
        raise Truncated(f"fixed header needs {_FIXED.size} bytes, file has {len(data)}")
    (
        _,
        version,
        backend_raw,
        vocab_size,
        token_count,
        text_bits,
        text_bytes,
        image_bytes,
        width,
        height,
    ) = _FIXED.unpack_from(data)
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format version {version}, this build reads {FORMAT_VERSION}")
    try:
        backend = Backend(backend_raw)
    except ValueError:
        raise InvalidHeader(f"unknown backend id {backend_raw}") from None
    pos = _FIXED.size
    predictor_id, pos = _read_string(data, pos, "predictor_id")
    vocab_identifier, pos = _read_string(data, pos, "vocab_identifier")
    if vocab_size < 2:
        raise InvalidHeader(f"vocab_size {vocab_size} below minimum of 2")
    if not predictor_id or not vocab_identifier:
        raise InvalidHeader("empty predictor_id or vocab_identifier")
    if (width == 0) != (height == 0):
        raise InvalidHeader("width and height must be given together")
    remaining = len(data) - pos
    declared = text_bytes + image_bytes
    if remaining < declared:
        raise Truncated(f"payloads declare {declared} bytes, {remaining} present")
    if remaining > declared:
        raise InvalidHeader(f"{remaining - declared} bytes beyond declared payloads")
    text_data = data[pos : pos + text_bytes]
    image_data = data[pos + text_bytes :]
    try:
        text = Bitstream(text_data, text_bits, backend)
    except ValueError as exc:
        raise InvalidHeader(f"text bit length inconsistent: {exc}") from exc
    header = ContainerHeader(
        format_version=version,
        backend=backend,
        predictor_id=predictor_id,
        vocab_identifier=vocab_identifier,
        vocab_size=vocab_size,
        token_count=token_count,
        text_bit_length=text_bits,
        text_payload_bytes=text_bytes,
        image_payload_bytes=image_bytes,
        width=width,
        height=height,
    )
    return ContainerFile(header, text, image_data)


def bits_per_pixel(container: ContainerFile) -> float:
    """8 * total file size / pixel count; needs the optional size fields."""
    h = container.header
    if h.width == 0 or h.height == 0:
        raise InvalidHeader("container does not declare image dimensions")
    return 8.0 * len(container.to_bytes()) / (h.width * h.height)


def _read_string(data: bytes, pos: int, what: str) -> tuple[str, int]:
    if pos + 2 > len(data):
        raise Truncated(f"file ends inside {what} length")
    (length,) = struct.unpack_from("<H", data, pos)
    pos += 2
    if pos + length > len(data):
        raise Truncated(f"file ends inside {what}")
    try:
        text = data[pos : pos + length].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidHeader(f"{what} is not valid UTF-8") from exc
    return text, pos + length
