"""The serving loop.

One connection at a time, requests answered in order. A malformed JSON
request gets an error response and the connection stays alive; only
unrecoverable framing damage (bad length prefix, stream dying mid-frame)
ends a connection.
"""

from __future__ import annotations

import socket
import sys
from dataclasses import dataclass

from .protocol import FramingError, dumps, format_probs, read_frame


@dataclass
class ServerConfig:
    model: object
    max_context: int = 1024


class ProbabilityServer:
    def __init__(self, config: ServerConfig) -> None:
        self.model = config.model
        self.max_context = config.max_context

    # request handling is a pure function of the payload bytes, which is
    # what makes golden-transcript testing byte-exact
    def handle_request(self, payload: bytes) -> bytes:
        import json

        try:
            request = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return dumps({"error": "malformed request: not valid JSON"})
        if not isinstance(request, dict):
            return dumps({"error": "malformed request: expected an object"})
        if request.get("hello") == 1:
            return dumps({"vocab": self.model.vocab_id, "size": self.model.size})
        if "ctx" in request:
            return self._handle_predict(request)
        return dumps({"error": "unrecognized request"})

    def _handle_predict(self, request: dict) -> bytes:
        if request.get("vocab") != self.model.vocab_id:
            return dumps(
                {"error": f"vocabulary mismatch: server speaks {self.model.vocab_id!r}"}
            )
        ctx = request["ctx"]
        if not isinstance(ctx, list) or not all(
            isinstance(t, int) and 0 <= t < self.model.size for t in ctx
        ):
            return dumps({"error": "ctx must be a list of in-range token ids"})
        if len(ctx) > self.max_context:
            return dumps(
                {"error": f"context of {len(ctx)} tokens exceeds maximum {self.max_context}"}
            )
        return dumps({"probs": format_probs(self.model.probs(ctx))})

    def serve_stream(self, rfile, wfile) -> None:
        """Answer frames until the peer closes or framing breaks."""
        while True:
            try:
                payload = read_frame(rfile)
            except FramingError:
                return
            if payload is None:
                return
            response = self.handle_request(payload)
            try:
                wfile.write(len(response).to_bytes(4, "big") + response)
                wfile.flush()
            except (BrokenPipeError, OSError):
                return

    def serve_stdio(self) -> None:
        self.serve_stream(sys.stdin.buffer, sys.stdout.buffer)

    def serve_tcp(self, host: str, port: int, *, announce=None, once: bool = False) -> None:
        """Bind and serve connections sequentially. With port 0 the chosen
        port is announced as 'listening on HOST:PORT' (stderr by default)."""
        announce = announce if announce is not None else sys.stderr
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as listener:
            listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            listener.bind((host, port))
            listener.listen(1)
            bound = listener.getsockname()
            print(f"listening on {bound[0]}:{bound[1]}", file=announce, flush=True)
            while True:
                conn, _ = listener.accept()
                with conn:
                    rfile = conn.makefile("rb")
                    wfile = conn.makefile("wb")
                    self.serve_stream(rfile, wfile)
                if once:
                    return
