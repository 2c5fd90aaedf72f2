"""Tokenizers and the token-file bridge.

Token files carry one id per line behind a vocabulary header:

    vocab <identifier> <size>
    <token id>
    ...

which is the exchange format the compression CLI consumes directly.
"""

from __future__ import annotations


class UntokenizableError(ValueError):
    """Tokenizing then detokenizing does not reproduce the input."""

    def __init__(self, offset: int) -> None:
        super().__init__(f"input does not survive the tokenizer round trip at offset {offset}")
        self.offset = offset


class ByteTokenizer:
    identifier = "bytes-v1"
    size = 256

    def tokenize(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def detokenize(self, ids: list[int]) -> str:
        return bytes(ids).decode("utf-8")


class HfTokenizer:
    """Adapter over a Hugging Face tokenizer, special tokens excluded."""

    def __init__(self, name: str) -> None:
        from transformers import AutoTokenizer

        self._tok = AutoTokenizer.from_pretrained(name)
        self.identifier = f"hf:{name}"
        self.size = len(self._tok)

    def tokenize(self, text: str) -> list[int]:
        return self._tok.encode(text, add_special_tokens=False)

    def detokenize(self, ids: list[int]) -> str:
        return self._tok.decode(ids, skip_special_tokens=True)


def get_tokenizer(spec: str):
    if spec == "bytes":
        return ByteTokenizer()
    if spec.startswith("hf:"):
        return HfTokenizer(spec[3:])
    raise ValueError(f"unknown tokenizer {spec!r} (use 'bytes' or 'hf:<model>')")


def export_tokens(text: str, tokenizer) -> str:
    """Render the token-file form of ``text``, verifying invertibility."""
    ids = tokenizer.tokenize(text)
    restored = tokenizer.detokenize(ids)
    if restored != text:
        offset = next(
            (i for i, (a, b) in enumerate(zip(text, restored)) if a != b),
            min(len(text), len(restored)),
        )
        raise UntokenizableError(offset)
    lines = [f"vocab {tokenizer.identifier} {tokenizer.size}"]
    lines.extend(str(t) for t in ids)
    return "\n".join(lines) + "\n"


def detokenize_file(content: str, tokenizer) -> str:
    lines = [line for line in content.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty token file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "vocab":
        raise ValueError(f"bad token file header: {lines[0]!r}")
    if head[1] != tokenizer.identifier:
        raise ValueError(
            f"token file was made with {head[1]!r}, tokenizer is {tokenizer.identifier!r}"
        )
    return tokenizer.detokenize([int(line) for line in lines[1:]])
