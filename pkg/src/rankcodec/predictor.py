"""Next-token probability sources.

Three interchangeable predictors feed the rank transform and the arithmetic
coder: a context-free uniform baseline, an additively smoothed n-gram model,
and a client for a remote model served over a length-prefixed JSON protocol.

Determinism is part of the contract. The decoder replays the encoder's
queries and must observe bit-identical probabilities, so a predictor may not
sample, reorder, or depend on state the decoder cannot reconstruct.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import socket
import struct
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ProtocolError, RemoteUnavailable, VocabMismatch

#: Hard cap on a single protocol frame; anything larger is a framing error.
MAX_FRAME_BYTES = 16 * 1024 * 1024

#: Default number of trailing context tokens sent to a remote model.
DEFAULT_MAX_CONTEXT = 1024


@dataclass(frozen=True)
class Vocabulary:
    """A token alphabet: ids run 0..size-1 under a named tokenizer scheme."""

    size: int
    identifier: str

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError("vocabulary needs at least two symbols")
        if not self.identifier:
            raise ValueError("vocabulary identifier must be non-empty")


@dataclass(frozen=True)
class TokenSequence:
    """An ordered run of token ids, all valid for one vocabulary."""

    vocab: Vocabulary
    tokens: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))
        size = self.vocab.size
        for t in self.tokens:
            if not 0 <= t < size:
                raise ValueError(f"token {t} outside vocabulary of size {size}")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True, eq=False)
class ProbabilityDistribution:
    """Per-token weights for the next position.

    When ``normalized`` is set the weights must sum to 1 within 1e-6; they
    must always be non-negative with at least one strictly positive entry.
    """

    probs: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probability vector must be one-dimensional and non-empty")
        if not np.isfinite(probs).all():
            raise ValueError("probability vector contains non-finite weights")
        if (probs < 0).any():
            raise ValueError("probability weights must be non-negative")
        total = float(probs.sum())
        if total <= 0.0:
            raise ValueError("at least one probability weight must be positive")
        if self.normalized and abs(total - 1.0) > 1e-6:
            raise ValueError(f"normalized distribution sums to {total!r}, not 1")


class Predictor:
    """Deterministic source of next-token distributions.

    Subclasses implement :meth:`probs_for`, the allocation-light path used
    inside coding loops. :meth:`predict` wraps it with full validation and
    is the public, test-facing entry point.

    Instances serve one caller at a time (coding is sequential by nature);
    they may be handed between threads but not shared concurrently.
    """

    vocab: Vocabulary

    @property
    def identifier(self) -> str:
        """Stable string naming this predictor's exact state."""
        raise NotImplementedError

    def probs_for(self, context_ids: Sequence[int]) -> np.ndarray:
        """Return a float64 weight per token given the tokens so far."""
        raise NotImplementedError

    def predict(self, context: TokenSequence) -> ProbabilityDistribution:
        if context.vocab != self.vocab:
            raise VocabMismatch(
                f"context uses vocabulary {context.vocab.identifier!r}, "
                f"predictor expects {self.vocab.identifier!r}"
            )
        return ProbabilityDistribution(self.probs_for(context.tokens))


class UniformPredictor(Predictor):
    """Assigns every token the same probability regardless of context."""

    def __init__(self, vocab: Vocabulary) -> None:
        self.vocab = vocab
        probs = np.full(vocab.size, 1.0 / vocab.size)
        probs.setflags(write=False)
        self._probs = probs

    @property
    def identifier(self) -> str:
        return "uniform"

    def probs_for(self, context_ids: Sequence[int]) -> np.ndarray:
        return self._probs


class NgramModel(Predictor):
    """Adaptive n-gram model with add-one smoothing and suffix backoff.

    ``order`` is the n of the n-gram: predictions condition on at most
    ``order - 1`` preceding tokens. Prediction uses the longest context
    suffix that was actually observed during updates, backing off one token
    at a time down to the unigram table. Add-one smoothing keeps every
    probability strictly positive, which the rank sort and the arithmetic
    coder both rely on.

    The model only changes through :meth:`update`; prediction is a pure
    function of (model state, context).
    """

    def __init__(self, vocab: Vocabulary, order: int) -> None:
        if order < 1:
            raise ValueError("n-gram order must be at least 1")
        self.vocab = vocab
        self.order = order
        # One table per context length m = 0..order-1:
        # context tuple -> {token -> count}, plus a total per context.
        self._counts: list[dict[tuple[int, ...], dict[int, int]]] = [
            {} for _ in range(order)
        ]
        self._totals: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]
        self._digest = hashlib.sha256(f"ngram:k={order}".encode())
        self._trained = False

    @property
    def identifier(self) -> str:
        tag = self._digest.hexdigest()[:12] if self._trained else "untrained"
        return f"ngram:k={self.order}:{tag}"

    def update(self, tokens: TokenSequence) -> None:
        """Fold one training sequence into the counts."""
        if tokens.vocab != self.vocab:
            raise VocabMismatch(
                f"training tokens use vocabulary {tokens.vocab.identifier!r}, "
                f"model expects {self.vocab.identifier!r}"
            )
        ids = tokens.tokens
        if not ids:
            return
        for i, tok in enumerate(ids):
            for m in range(min(i, self.order - 1) + 1):
                ctx = ids[i - m : i]
                bucket = self._counts[m].setdefault(ctx, {})
                bucket[tok] = bucket.get(tok, 0) + 1
                self._totals[m][ctx] = self._totals[m].get(ctx, 0) + 1
        self._digest.update(b"|" + np.asarray(ids, dtype="<u4").tobytes())
        self._trained = True

    def probs_for(self, context_ids: Sequence[int]) -> np.ndarray:
        n = len(context_ids)
        for m in range(min(self.order - 1, n), 0, -1):
            key = tuple(int(t) for t in context_ids[n - m : n])
            bucket = self._counts[m].get(key)
            if bucket:
                return self._smoothed(bucket, self._totals[m][key])
        bucket = self._counts[0].get((), {})
        return self._smoothed(bucket, self._totals[0].get((), 0))

    def _smoothed(self, bucket: dict[int, int], total: int) -> np.ndarray:
        probs = np.ones(self.vocab.size)
        for tok, count in bucket.items():
            probs[tok] += count
        probs /= total + self.vocab.size
        return probs


def uniform_predict(vocab: Vocabulary, context: TokenSequence) -> ProbabilityDistribution:
    """Uniform next-token distribution, independent of the context."""
    return UniformPredictor(vocab).predict(context)


def ngram_predict(model: NgramModel, context: TokenSequence) -> ProbabilityDistribution:
    """Smoothed n-gram estimate conditioned on the context's trailing tokens."""
    return model.predict(context)


def ngram_update(model: NgramModel, tokens: TokenSequence) -> None:
    """Feed a training sequence to an n-gram model."""
    model.update(tokens)


def remote_predict(client: "RemotePredictor", context: TokenSequence) -> ProbabilityDistribution:
    """Distribution supplied by a remote model, renormalized locally."""
    return client.predict(context)


# ---------------------------------------------------------------------------
# Wire protocol client
#
# Frames are a 4-byte big-endian length followed by UTF-8 JSON. The first
# exchange on a connection is {"hello": 1} -> {"vocab": ..., "size": ...};
# afterwards each {"ctx": [...], "vocab": ...} request yields either
# {"probs": [...]} or {"error": "..."}.
# ---------------------------------------------------------------------------


def encode_frame(obj: dict) -> bytes:
    payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(payload)) + payload


class _SocketTransport:
    def __init__(self, sock: socket.socket) -> None:
        self._sock = sock

    def send(self, data: bytes) -> None:
        self._sock.sendall(data)

    def recv(self, n: int) -> bytes:
        return self._sock.recv(n)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class _StdioTransport:
    """Talks to a predictor server spawned as a child process."""

    def __init__(self, argv: list[str]) -> None:
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise RemoteUnavailable(f"cannot spawn predictor server: {exc}") from exc

    def send(self, data: bytes) -> None:
        assert self._proc.stdin is not None
        self._proc.stdin.write(data)
        self._proc.stdin.flush()

    def recv(self, n: int) -> bytes:
        assert self._proc.stdout is not None
        return self._proc.stdout.read(n)

    def close(self) -> None:
        self._proc.terminate()
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class RemotePredictor(Predictor):
    """Client half of the prediction protocol.

    ``address`` accepts ``host:port`` for a TCP server or ``stdio:<command>``
    to spawn the server as a subprocess and talk over its standard streams.
    Contexts longer than ``max_context`` are truncated oldest-first before
    they go on the wire.
    """

    def __init__(
        self,
        transport,
        *,
        expected_vocab: Vocabulary | None = None,
        max_context: int = DEFAULT_MAX_CONTEXT,
    ) -> None:
        if max_context < 1:
            raise ValueError("max_context must be positive")
        self._transport = transport
        self.max_context = max_context
        try:
            hello = self._round_trip({"hello": 1})
            vocab_id = hello.get("vocab")
            size = hello.get("size")
            if not isinstance(vocab_id, str) or not isinstance(size, int):
                raise ProtocolError(f"malformed handshake response: {hello!r}")
            try:
                self.vocab = Vocabulary(size, vocab_id)
            except ValueError as exc:
                raise ProtocolError(f"handshake declares invalid vocabulary: {exc}") from exc
            if expected_vocab is not None and expected_vocab != self.vocab:
                raise VocabMismatch(
                    f"server speaks {vocab_id!r} (size {size}), "
                    f"expected {expected_vocab.identifier!r} (size {expected_vocab.size})"
                )
        except Exception:
            self.close()
            raise

    @classmethod
    def connect(
        cls,
        address: str,
        *,
        expected_vocab: Vocabulary | None = None,
        max_context: int = DEFAULT_MAX_CONTEXT,
        timeout: float = 30.0,
    ) -> "RemotePredictor":
        if address.startswith("stdio:"):
            argv = shlex.split(address[len("stdio:") :])
            if not argv:
                raise ValueError("stdio predictor address has no command")
            transport = _StdioTransport(argv)
        else:
            host, sep, port = address.rpartition(":")
            if not sep or not host:
                raise ValueError(f"remote address {address!r} is not host:port or stdio:<cmd>")
            try:
                sock = socket.create_connection((host, int(port)), timeout=timeout)
            except (OSError, ValueError) as exc:
                raise RemoteUnavailable(f"cannot connect to {address}: {exc}") from exc
            transport = _SocketTransport(sock)
        return cls(transport, expected_vocab=expected_vocab, max_context=max_context)

    @property
    def identifier(self) -> str:
        return f"remote:{self.vocab.identifier}"

    def probs_for(self, context_ids: Sequence[int]) -> np.ndarray:
        ctx = [int(t) for t in context_ids[-self.max_context :]]
        reply = self._round_trip({"ctx": ctx, "vocab": self.vocab.identifier})
        if "error" in reply:
            raise ProtocolError(f"server error: {reply['error']}")
        probs = reply.get("probs")
        if not isinstance(probs, list) or len(probs) != self.vocab.size:
            raise ProtocolError(
                f"expected {self.vocab.size} probabilities, got {type(probs).__name__}"
            )
        arr = np.asarray(probs, dtype=np.float64)
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ProtocolError("server sent negative or non-finite weights")
        total = arr.sum()
        if total <= 0.0:
            raise ProtocolError("server sent an all-zero distribution")
        return arr / total

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "RemotePredictor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _round_trip(self, request: dict) -> dict:
        try:
            self._transport.send(encode_frame(request))
            header = self._recv_exactly(4)
            (length,) = struct.unpack(">I", header)
            if length > MAX_FRAME_BYTES:
                raise ProtocolError(f"response frame of {length} bytes exceeds limit")
            payload = self._recv_exactly(length)
        except (OSError, BrokenPipeError) as exc:
            raise RemoteUnavailable(f"transport failure: {exc}") from exc
        try:
            reply = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"response is not valid JSON: {exc}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError("response is not a JSON object")
        return reply

    def _recv_exactly(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining > 0:
            chunk = self._transport.recv(remaining)
            if not chunk:
                raise RemoteUnavailable("connection closed mid-frame")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)
