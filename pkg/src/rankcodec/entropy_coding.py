"""Lossless back ends over integer symbol streams.

Three coders turn rank (or token) sequences into bitstreams and back:

* ``deflate``: symbols serialized as unsigned LEB128 varints, then a raw
  DEFLATE (RFC 1951) stream. Small ranks cost one byte before compression
  and the payload is readable by any conforming inflater.
* ``adaptive huffman``: an FGK-style dynamic Huffman tree over symbols,
  with an escape code (the not-yet-transmitted leaf) introducing first
  occurrences as fixed-width ids. Encoder and decoder grow identical trees.
* ``arithmetic``: a 32-bit arithmetic coder driven by a predictor's
  per-step distribution, quantized to 16-bit integer frequencies with every
  symbol floored at one count so nothing is ever uncodable.

None of the payloads records its own symbol count; the count travels out of
band in the container header, and decoders take it as an argument.
"""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CorruptStream, LengthMismatch
from .predictor import Predictor, TokenSequence, Vocabulary
from .rank_transform import RankSequence

__all__ = [
    "Backend",
    "Bitstream",
    "CodingStats",
    "deflate_encode",
    "deflate_decode",
    "adaptive_huffman_encode",
    "adaptive_huffman_decode",
    "arithmetic_encode",
    "arithmetic_decode",
    "cross_entropy_bits",
    "quantize_distribution",
]


class Backend(enum.IntEnum):
    DEFLATE = 1
    ADAPTIVE_HUFFMAN = 2
    ARITHMETIC = 3


@dataclass(frozen=True)
class Bitstream:
    """An encoded payload with its exact bit count and producing backend."""

    data: bytes
    bit_length: int
    backend: Backend

    def __post_init__(self) -> None:
        nbytes = len(self.data)
        if self.bit_length < 0 or self.bit_length > 8 * nbytes:
            raise ValueError("bit_length exceeds payload size")
        if nbytes and self.bit_length <= 8 * (nbytes - 1):
            raise ValueError("payload carries whole slack bytes")


@dataclass(frozen=True)
class CodingStats:
    """Bookkeeping for one encode: symbol count, emitted bits, model cost."""

    input_symbols: int
    output_bits: int
    cross_entropy_bits: float | None = None

    def __post_init__(self) -> None:
        if self.input_symbols < 0 or self.output_bits < 0:
            raise ValueError("counts must be non-negative")


# ---------------------------------------------------------------------------
# Bit-level IO (MSB first)
# ---------------------------------------------------------------------------


class _BitWriter:
    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_count = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | (bit & 1)
        self._nacc += 1
        self.bit_count += 1
        if self._nacc == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def write_bits(self, value: int, width: int) -> None:
        for shift in range(width - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def getvalue(self) -> bytes:
        data = bytes(self._buf)
        if self._nacc:
            data += bytes([self._acc << (8 - self._nacc)])
        return data


class _BitReader:
    """Reads MSB-first bits; optionally pads past the end with zeros."""

    def __init__(self, data: bytes, bit_length: int, *, pad: bool = False) -> None:
        self._data = data
        self._bit_length = bit_length
        self._pos = 0
        self._pad = pad

    def read_bit(self) -> int:
        if self._pos >= self._bit_length:
            if self._pad:
                self._pos += 1
                return 0
            raise CorruptStream("bitstream exhausted mid-symbol")
        byte = self._data[self._pos >> 3]
        bit = (byte >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, width: int) -> int:
        value = 0
        for _ in range(width):
            value = (value << 1) | self.read_bit()
        return value


# ---------------------------------------------------------------------------
# LEB128 varints
# ---------------------------------------------------------------------------

_MAX_VARINT_BYTES = 10  # enough for 64-bit values; longer means corruption


def encode_uleb128(values: Iterable[int]) -> bytes:
    out = bytearray()
    for value in values:
        v = int(value)
        while True:
            byte = v & 0x7F
            v >>= 7
            if v:
                out.append(byte | 0x80)
            else:
                out.append(byte)
                break
    return bytes(out)


def decode_uleb128(data: bytes, count: int) -> list[int]:
    values: list[int] = []
    pos = 0
    end = len(data)
    while len(values) < count:
        if pos >= end:
            raise LengthMismatch(
                f"payload holds {len(values)} symbols, {count} declared"
            )
        value = 0
        shift = 0
        start = pos
        while True:
            if pos >= end:
                raise CorruptStream("truncated varint")
            if pos - start >= _MAX_VARINT_BYTES:
                raise CorruptStream("overlong varint")
            byte = data[pos]
            pos += 1
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                break
            shift += 7
        values.append(value)
    if pos != end:
        raise LengthMismatch(f"{end - pos} trailing bytes after {count} symbols")
    return values


# ---------------------------------------------------------------------------
# Deflate backend
# ---------------------------------------------------------------------------


def deflate_encode_symbols(symbols: Sequence[int]) -> Bitstream:
    if not symbols:
        return Bitstream(b"", 0, Backend.DEFLATE)
    comp = zlib.compressobj(9, zlib.DEFLATED, -15)
    payload = comp.compress(encode_uleb128(symbols)) + comp.flush()
    return Bitstream(payload, 8 * len(payload), Backend.DEFLATE)


def deflate_decode_symbols(bs: Bitstream, alphabet_size: int, count: int) -> list[int]:
    if bs.backend != Backend.DEFLATE:
        raise CorruptStream(f"bitstream backend is {bs.backend.name}, not DEFLATE")
    if count == 0:
        if bs.data:
            raise LengthMismatch("payload present but zero symbols declared")
        return []
    decomp = zlib.decompressobj(-15)
    try:
        raw = decomp.decompress(bs.data) + decomp.flush()
    except zlib.error as exc:
        raise CorruptStream(f"invalid DEFLATE stream: {exc}") from exc
    if not decomp.eof:
        raise CorruptStream("DEFLATE stream has no final block")
    if decomp.unused_data:
        raise CorruptStream("bytes after DEFLATE final block")
    symbols = decode_uleb128(raw, count)
    for s in symbols:
        if s >= alphabet_size:
            raise CorruptStream(f"symbol {s} outside alphabet of size {alphabet_size}")
    return symbols


def deflate_encode(ranks: RankSequence) -> Bitstream:
    """Raw-DEFLATE compress a rank sequence (LEB128 byte serialization)."""
    return deflate_encode_symbols(ranks.ranks)


def deflate_decode(bs: Bitstream, vocab: Vocabulary, count: int) -> RankSequence:
    return RankSequence(vocab, tuple(deflate_decode_symbols(bs, vocab.size, count)))


# ---------------------------------------------------------------------------
# Adaptive Huffman (FGK) backend
# ---------------------------------------------------------------------------


class _Node:
    __slots__ = ("weight", "parent", "left", "right", "symbol", "pos")

    def __init__(self, weight=0, parent=None, symbol=None, pos=0):
        self.weight = weight
        self.parent = parent
        self.left = None
        self.right = None
        self.symbol = symbol
        self.pos = pos


class FgkTree:
    """Dynamic Huffman tree shared by encoder and decoder.

    ``self._nodes`` keeps every node in decreasing implicit-number order
    (root first, the zero-weight escape leaf last), so the sibling property
    reads as non-increasing weights along the list and a weight block's
    leader is found by scanning toward the root. Updates follow FGK: swap
    the touched node with its block leader (never with an ancestor), bump
    its weight, move to the parent.
    """

    def __init__(self, alphabet_size: int) -> None:
        if alphabet_size < 2:
            raise ValueError("alphabet needs at least two symbols")
        self.alphabet_size = alphabet_size
        self.symbol_bits = (alphabet_size - 1).bit_length()
        self._nyt = _Node()
        self._root = self._nyt
        self._nodes: list[_Node] = [self._nyt]
        self._leaves: dict[int, _Node] = {}

    def encode_symbol(self, writer: _BitWriter, symbol: int) -> None:
        leaf = self._leaves.get(symbol)
        if leaf is None:
            self._emit_code(writer, self._nyt)
            writer.write_bits(symbol, self.symbol_bits)
        else:
            self._emit_code(writer, leaf)
        self._update(symbol)

    def decode_symbol(self, reader: _BitReader) -> int:
        node = self._root
        while node.left is not None:
            node = node.right if reader.read_bit() else node.left
        if node is self._nyt:
            symbol = reader.read_bits(self.symbol_bits)
            if symbol >= self.alphabet_size or symbol in self._leaves:
                raise CorruptStream(f"invalid escape for symbol {symbol}")
        else:
            symbol = node.symbol
        self._update(symbol)
        return symbol

    def fingerprint(self) -> tuple:
        """Structural state snapshot; equal iff the trees evolved identically."""
        return tuple(
            (n.weight, -1 if n.symbol is None else n.symbol, n.left is None)
            for n in self._nodes
        )

    def _emit_code(self, writer: _BitWriter, node: _Node) -> None:
        bits = []
        while node.parent is not None:
            bits.append(0 if node.parent.left is node else 1)
            node = node.parent
        for bit in reversed(bits):
            writer.write_bit(bit)

    def _update(self, symbol: int) -> None:
        node = self._leaves.get(symbol)
        if node is None:
            node = self._split_nyt(symbol)
        while node is not None:
            leader = self._block_leader(node)
            if leader is not node and not self._is_ancestor(leader, node):
                self._swap(leader, node)
            node.weight += 1
            node = node.parent

    def _split_nyt(self, symbol: int) -> _Node:
        old = self._nyt
        pos = len(self._nodes)
        leaf = _Node(parent=old, symbol=symbol, pos=pos)
        nyt = _Node(parent=old, pos=pos + 1)
        old.left, old.right, old.symbol = nyt, leaf, None
        self._nodes.extend((leaf, nyt))
        self._leaves[symbol] = leaf
        self._nyt = nyt
        return leaf

    def _block_leader(self, node: _Node) -> _Node:
        i = node.pos
        weight = node.weight
        while i > 0 and self._nodes[i - 1].weight == weight:
            i -= 1
        return self._nodes[i]

    @staticmethod
    def _is_ancestor(candidate: _Node, node: _Node) -> bool:
        parent = node.parent
        while parent is not None:
            if parent is candidate:
                return True
            parent = parent.parent
        return False

    def _swap(self, a: _Node, b: _Node) -> None:
        self._nodes[a.pos], self._nodes[b.pos] = b, a
        a.pos, b.pos = b.pos, a.pos
        pa, pb = a.parent, b.parent
        if pa is pb:
            pa.left, pa.right = pa.right, pa.left
        else:
            if pa.left is a:
                pa.left = b
            else:
                pa.right = b
            if pb.left is b:
                pb.left = a
            else:
                pb.right = a
            a.parent, b.parent = pb, pa


def adaptive_huffman_encode_symbols(symbols: Sequence[int], alphabet_size: int) -> Bitstream:
    tree = FgkTree(alphabet_size)
    writer = _BitWriter()
    for s in symbols:
        tree.encode_symbol(writer, int(s))
    return Bitstream(writer.getvalue(), writer.bit_count, Backend.ADAPTIVE_HUFFMAN)


def adaptive_huffman_decode_symbols(bs: Bitstream, alphabet_size: int, count: int) -> list[int]:
    if bs.backend != Backend.ADAPTIVE_HUFFMAN:
        raise CorruptStream(f"bitstream backend is {bs.backend.name}, not ADAPTIVE_HUFFMAN")
    tree = FgkTree(alphabet_size)
    reader = _BitReader(bs.data, bs.bit_length)
    return [tree.decode_symbol(reader) for _ in range(count)]


def adaptive_huffman_encode(ranks: RankSequence) -> Bitstream:
    """Code ranks with a dynamic Huffman tree grown one symbol at a time."""
    return adaptive_huffman_encode_symbols(ranks.ranks, ranks.vocab.size)


def adaptive_huffman_decode(bs: Bitstream, vocab: Vocabulary, count: int) -> RankSequence:
    return RankSequence(vocab, tuple(adaptive_huffman_decode_symbols(bs, vocab.size, count)))


# ---------------------------------------------------------------------------
# Arithmetic backend
# ---------------------------------------------------------------------------

_STATE_BITS = 32
_FULL = 1 << _STATE_BITS
_MASK = _FULL - 1
_TOP = _FULL >> 1
_SECOND = _FULL >> 2
_TOTAL_TARGET = 1 << 16

#: Coder overhead above the quantized-model cross entropy, in bits:
#: at most two bits of unflushed range precision plus the final
#: disambiguation bit and one margin bit.
ARITHMETIC_OVERHEAD_BITS = 32


def quantize_distribution(probs: np.ndarray) -> np.ndarray:
    """Integer cumulative frequencies (length V+1) for a probability vector.

    Frequencies are ``floor(p * (2^16 - V)) + 1``: monotone in p, total at
    most 2^16, and never zero, so every symbol stays codable no matter what
    the model thinks of it. Integer frequencies are what both coder halves
    share, which keeps them bit-exact across platforms.
    """
    probs = np.asarray(probs, dtype=np.float64)
    size = probs.shape[0]
    if size >= _TOTAL_TARGET:
        raise ValueError(
            f"alphabet of {size} symbols exceeds the 16-bit frequency budget"
        )
    freqs = (probs * (_TOTAL_TARGET - size)).astype(np.int64) + 1
    cumul = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(freqs, out=cumul[1:])
    return cumul


class _ArithmeticEncoder:
    def __init__(self, writer: _BitWriter) -> None:
        self._low = 0
        self._high = _MASK
        self._pending = 0
        self._writer = writer

    def encode(self, cumul: np.ndarray, symbol: int) -> None:
        total = int(cumul[-1])
        sym_low = int(cumul[symbol])
        sym_high = int(cumul[symbol + 1])
        span = self._high - self._low + 1
        self._high = self._low + sym_high * span // total - 1
        self._low = self._low + sym_low * span // total
        while True:
            if (self._low ^ self._high) & _TOP == 0:
                self._emit(self._low >> (_STATE_BITS - 1))
                self._low = (self._low << 1) & _MASK
                self._high = ((self._high << 1) & _MASK) | 1
            elif self._low & ~self._high & _SECOND:
                self._pending += 1
                self._low = (self._low << 1) & (_MASK >> 1)
                self._high = ((self._high << 1) & (_MASK >> 1)) | _TOP | 1
            else:
                break

    def finish(self) -> None:
        # One bit pins a value inside [low, high] for a zero-padding decoder
        # (low and high sit in different halves after every update). The
        # deferred carry bits and one margin bit are emitted too, so the
        # stored bit count never undershoots the information content.
        self._emit(1)
        self._writer.write_bit(0)

    def _emit(self, bit: int) -> None:
        self._writer.write_bit(bit)
        for _ in range(self._pending):
            self._writer.write_bit(bit ^ 1)
        self._pending = 0


class _ArithmeticDecoder:
    def __init__(self, reader: _BitReader) -> None:
        self._low = 0
        self._high = _MASK
        self._reader = reader
        self._code = 0
        for _ in range(_STATE_BITS):
            self._code = (self._code << 1) | reader.read_bit()

    def decode(self, cumul: np.ndarray) -> int:
        total = int(cumul[-1])
        span = self._high - self._low + 1
        offset = self._code - self._low
        value = ((offset + 1) * total - 1) // span
        symbol = int(np.searchsorted(cumul, value, side="right")) - 1
        sym_low = int(cumul[symbol])
        sym_high = int(cumul[symbol + 1])
        self._high = self._low + sym_high * span // total - 1
        self._low = self._low + sym_low * span // total
        while True:
            if (self._low ^ self._high) & _TOP == 0:
                self._low = (self._low << 1) & _MASK
                self._high = ((self._high << 1) & _MASK) | 1
                self._code = ((self._code << 1) & _MASK) | self._reader.read_bit()
            elif self._low & ~self._high & _SECOND:
                self._low = (self._low << 1) & (_MASK >> 1)
                self._high = ((self._high << 1) & (_MASK >> 1)) | _TOP | 1
                self._code = (
                    (self._code & _TOP)
                    | ((self._code << 1) & (_MASK >> 1))
                    | self._reader.read_bit()
                )
            else:
                break
        return symbol


def arithmetic_encode(predictor: Predictor, tokens: TokenSequence) -> Bitstream:
    """Code tokens directly against the predictor's per-step distribution."""
    if predictor.vocab != tokens.vocab:
        raise ValueError("predictor and tokens disagree on vocabulary")
    if not tokens.tokens:
        return Bitstream(b"", 0, Backend.ARITHMETIC)
    writer = _BitWriter()
    encoder = _ArithmeticEncoder(writer)
    context: list[int] = []
    for tok in tokens.tokens:
        cumul = quantize_distribution(predictor.probs_for(context))
        encoder.encode(cumul, tok)
        context.append(tok)
    encoder.finish()
    return Bitstream(writer.getvalue(), writer.bit_count, Backend.ARITHMETIC)


def arithmetic_decode(
    predictor: Predictor, bs: Bitstream, vocab: Vocabulary, count: int
) -> TokenSequence:
    if bs.backend != Backend.ARITHMETIC:
        raise CorruptStream(f"bitstream backend is {bs.backend.name}, not ARITHMETIC")
    if predictor.vocab != vocab:
        raise ValueError("predictor and vocabulary disagree")
    if count == 0:
        return TokenSequence(vocab, ())
    reader = _BitReader(bs.data, bs.bit_length, pad=True)
    decoder = _ArithmeticDecoder(reader)
    context: list[int] = []
    for _ in range(count):
        cumul = quantize_distribution(predictor.probs_for(context))
        context.append(decoder.decode(cumul))
    return TokenSequence(vocab, tuple(context))


def cross_entropy_bits(predictor: Predictor, tokens: TokenSequence) -> float:
    """Sum of -log2 p over the stream, under the quantized coding model."""
    total_bits = 0.0
    context: list[int] = []
    for tok in tokens.tokens:
        cumul = quantize_distribution(predictor.probs_for(context))
        freq = int(cumul[tok + 1]) - int(cumul[tok])
        total_bits += -math.log2(freq / int(cumul[-1]))
        context.append(tok)
    return total_bits
