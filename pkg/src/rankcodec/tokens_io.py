"""Token input and output for the command line.

Plain text is tokenized at byte level (vocabulary "bytes-v1", size 256) so
the toolkit needs no external tokenizer. Token files produced by other
tokenizers use a line format that any tool can emit:

    vocab <identifier> <size>
    <token id>
    <token id>
    ...
"""

from __future__ import annotations

from .predictor import TokenSequence, Vocabulary

__all__ = [
    "BYTES_VOCAB",
    "bytes_to_tokens",
    "tokens_to_bytes",
    "render_token_file",
    "parse_token_file",
    "looks_like_token_file",
]

BYTES_VOCAB = Vocabulary(256, "bytes-v1")

_TOKEN_FILE_PREFIX = b"vocab "


def bytes_to_tokens(data: bytes) -> TokenSequence:
    return TokenSequence(BYTES_VOCAB, tuple(data))


def tokens_to_bytes(tokens: TokenSequence) -> bytes:
    if tokens.vocab != BYTES_VOCAB:
        raise ValueError(
            f"cannot render vocabulary {tokens.vocab.identifier!r} as raw bytes"
        )
    return bytes(tokens.tokens)


def looks_like_token_file(data: bytes) -> bool:
    return data.startswith(_TOKEN_FILE_PREFIX)


def render_token_file(tokens: TokenSequence) -> bytes:
    lines = [f"vocab {tokens.vocab.identifier} {tokens.vocab.size}"]
    lines.extend(str(t) for t in tokens.tokens)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_token_file(data: bytes) -> TokenSequence:
    text = data.decode("utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty token file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "vocab":
        raise ValueError(f"bad token file header: {lines[0]!r}")
    vocab = Vocabulary(int(head[2]), head[1])
    try:
        tokens = tuple(int(line) for line in lines[1:])
    except ValueError as exc:
        raise ValueError(f"bad token line: {exc}") from exc
    return TokenSequence(vocab, tokens)
