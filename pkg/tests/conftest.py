"""Shared fixtures: deterministic predictors for oracle tests and an
in-process mock of the remote prediction protocol.

The mock server speaks the real wire format over a socketpair from a
daemon thread, so remote-predictor tests exercise framing, handshake and
renormalization without any external process.
"""

from __future__ import annotations

import json
import socket
import struct
import threading
from pathlib import Path
from typing import Sequence

import numpy as np
import pytest
from hypothesis import settings

import rankcodec as rc

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

FIXTURES = Path(__file__).parent / "fixtures"


class OraclePredictor(rc.Predictor):
    """Knows the sequence being coded and puts probability 1 on the truth."""

    def __init__(self, vocab: rc.Vocabulary, sequence: Sequence[int]) -> None:
        self.vocab = vocab
        self._sequence = tuple(sequence)

    @property
    def identifier(self) -> str:
        return "test-oracle"

    def probs_for(self, context_ids):
        probs = np.zeros(self.vocab.size)
        probs[self._sequence[len(context_ids)]] = 1.0
        return probs


class CountingPredictor(rc.UniformPredictor):
    """Uniform predictor that records how often it was queried."""

    def __init__(self, vocab: rc.Vocabulary) -> None:
        super().__init__(vocab)
        self.calls = 0

    def probs_for(self, context_ids):
        self.calls += 1
        return super().probs_for(context_ids)


def default_mock_rows(size: int, nrows: int = 6) -> list[list[float]]:
    """Deterministic, context-length-keyed weight table for the mock server."""
    rows = []
    for r in range(nrows):
        rows.append([float(1 + (i * (r + 3) + r) % 17) for i in range(size)])
    return rows


class MockRemoteServer:
    """Tiny in-process server speaking the length-prefixed JSON protocol."""

    def __init__(self, vocab_id: str = "mock-v1", size: int = 16, rows=None) -> None:
        self.vocab_id = vocab_id
        self.size = size
        self.rows = rows if rows is not None else default_mock_rows(size)
        self._client_side, self._server_side = socket.socketpair()
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    def connect(self, **kwargs) -> rc.RemotePredictor:
        from rankcodec.predictor import _SocketTransport

        return rc.RemotePredictor(_SocketTransport(self._client_side), **kwargs)

    def close(self) -> None:
        for sock in (self._client_side, self._server_side):
            try:
                sock.close()
            except OSError:
                pass
        self._thread.join(timeout=5)

    def _serve(self) -> None:
        sock = self._server_side
        try:
            while True:
                header = self._recv_exactly(sock, 4)
                if header is None:
                    return
                (length,) = struct.unpack(">I", header)
                payload = self._recv_exactly(sock, length)
                if payload is None:
                    return
                sock.sendall(self._respond(payload))
        except OSError:
            return

    def _respond(self, payload: bytes) -> bytes:
        try:
            request = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return _frame({"error": "malformed request"})
        if request.get("hello") == 1:
            return _frame({"vocab": self.vocab_id, "size": self.size})
        if request.get("vocab") != self.vocab_id:
            return _frame({"error": "vocabulary mismatch"})
        ctx = request.get("ctx", [])
        row = self.rows[min(len(ctx), len(self.rows) - 1)]
        return _frame({"probs": row})

    @staticmethod
    def _recv_exactly(sock: socket.socket, n: int) -> bytes | None:
        data = b""
        while len(data) < n:
            chunk = sock.recv(n - len(data))
            if not chunk:
                return None
            data += chunk
        return data


def _frame(obj: dict) -> bytes:
    payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(payload)) + payload


@pytest.fixture
def mock_server():
    server = MockRemoteServer()
    yield server
    server.close()


@pytest.fixture
def caption_corpus() -> list[tuple[str, rc.TokenSequence]]:
    from rankcodec.tokens_io import bytes_to_tokens

    return [
        (path.name, bytes_to_tokens(path.read_bytes()))
        for path in sorted((FIXTURES / "captions").iterdir())
    ]


@pytest.fixture
def trained_ngram() -> rc.NgramModel:
    from rankcodec.tokens_io import BYTES_VOCAB, bytes_to_tokens

    model = rc.NgramModel(BYTES_VOCAB, 3)
    model.update(bytes_to_tokens((FIXTURES / "training.txt").read_bytes()))
    return model
