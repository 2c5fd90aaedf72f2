"""End-to-end coding pipelines: backend selection, the optional rank
transform in front of it, and corpus benchmarking over all of them.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .container import PREDICTOR_NONE
from .entropy_coding import (
    Backend,
    Bitstream,
    CodingStats,
    adaptive_huffman_decode_symbols,
    adaptive_huffman_encode_symbols,
    arithmetic_decode,
    arithmetic_encode,
    cross_entropy_bits,
    deflate_decode_symbols,
    deflate_encode_symbols,
)
from .errors import VocabMismatch
from .metrics import RatioReport, ratio_report
from .predictor import Predictor, TokenSequence, Vocabulary
from .rank_transform import RankSequence, ranks_to_tokens, tokens_to_ranks

__all__ = [
    "BACKEND_CHOICES",
    "PIPELINE_CHOICES",
    "backend_needs_predictor",
    "raw_bits",
    "encode_payload",
    "decode_payload",
    "coding_stats",
    "run_bench",
]

# backend flag -> (entropy backend, rank transform in front of it)
_BACKENDS: dict[str, tuple[Backend, bool]] = {
    "deflate": (Backend.DEFLATE, False),
    "huffman": (Backend.ADAPTIVE_HUFFMAN, False),
    "arithmetic": (Backend.ARITHMETIC, False),
    "rank+deflate": (Backend.DEFLATE, True),
    "rank+huffman": (Backend.ADAPTIVE_HUFFMAN, True),
}

BACKEND_CHOICES = tuple(_BACKENDS)

#: Bench pipelines: the backends plus the uncoded baseline.
PIPELINE_CHOICES = ("none",) + BACKEND_CHOICES


def backend_needs_predictor(name: str) -> bool:
    backend, use_rank = _BACKENDS[name]
    return use_rank or backend == Backend.ARITHMETIC


def raw_bits(tokens: TokenSequence) -> int:
    """Uncoded cost: fixed-width ids (8 bits per byte-level token)."""
    return len(tokens) * (tokens.vocab.size - 1).bit_length()


def encode_payload(
    name: str, tokens: TokenSequence, predictor: Predictor | None = None
) -> tuple[Bitstream, str]:
    """Encode tokens under a named backend.

    Returns the bitstream and the predictor id to record in the container
    ("none" when the payload was coded without a model).
    """
    backend, use_rank = _BACKENDS[name]
    if backend_needs_predictor(name):
        if predictor is None:
            raise ValueError(f"backend {name!r} needs a predictor")
        if predictor.vocab != tokens.vocab:
            raise VocabMismatch(
                f"predictor speaks {predictor.vocab.identifier!r}, "
                f"input is {tokens.vocab.identifier!r}"
            )
    if backend == Backend.ARITHMETIC:
        return arithmetic_encode(predictor, tokens), predictor.identifier
    if use_rank:
        symbols: Sequence[int] = tokens_to_ranks(predictor, tokens).ranks
        predictor_id = predictor.identifier
    else:
        symbols = tokens.tokens
        predictor_id = PREDICTOR_NONE
    if backend == Backend.DEFLATE:
        return deflate_encode_symbols(symbols), predictor_id
    return adaptive_huffman_encode_symbols(symbols, tokens.vocab.size), predictor_id


def decode_payload(
    bs: Bitstream,
    vocab: Vocabulary,
    count: int,
    predictor_id: str,
    predictor: Predictor | None = None,
) -> TokenSequence:
    """Invert :func:`encode_payload` given the container header fields."""
    uses_model = predictor_id != PREDICTOR_NONE
    if uses_model:
        if predictor is None:
            raise ValueError(f"payload was coded with predictor {predictor_id!r}")
        if predictor.identifier != predictor_id:
            raise VocabMismatch(
                f"payload needs predictor {predictor_id!r}, got {predictor.identifier!r}"
            )
        if predictor.vocab != vocab:
            raise VocabMismatch(
                f"predictor speaks {predictor.vocab.identifier!r}, "
                f"container declares {vocab.identifier!r}"
            )
    if bs.backend == Backend.ARITHMETIC:
        return arithmetic_decode(predictor, bs, vocab, count)
    if bs.backend == Backend.DEFLATE:
        symbols = deflate_decode_symbols(bs, vocab.size, count)
    else:
        symbols = adaptive_huffman_decode_symbols(bs, vocab.size, count)
    if uses_model:
        return ranks_to_tokens(predictor, RankSequence(vocab, tuple(symbols)))
    return TokenSequence(vocab, tuple(symbols))


def coding_stats(
    name: str,
    tokens: TokenSequence,
    bs: Bitstream,
    predictor: Predictor | None = None,
) -> CodingStats:
    cross = None
    if name == "arithmetic" and predictor is not None:
        cross = cross_entropy_bits(predictor, tokens)
    return CodingStats(len(tokens), bs.bit_length, cross)


def pipeline_bits(
    name: str, tokens: TokenSequence, predictor: Predictor | None = None
) -> int:
    if name == "none":
        return raw_bits(tokens)
    bs, _ = encode_payload(name, tokens, predictor)
    return bs.bit_length


def run_bench(
    documents: Mapping[str, TokenSequence] | Sequence[tuple[str, TokenSequence]],
    pipelines: Sequence[str],
    predictor: Predictor | None = None,
) -> RatioReport:
    """Run every pipeline over every document and summarize the bit totals.

    Document order is preserved in the report, so identical inputs always
    produce identical reports.
    """
    docs = list(documents.items()) if isinstance(documents, Mapping) else list(documents)
    for name in pipelines:
        if name not in PIPELINE_CHOICES:
            raise ValueError(f"unknown pipeline {name!r}")
    results = {
        name: [pipeline_bits(name, tokens, predictor) for _, tokens in docs]
        for name in pipelines
    }
    return ratio_report(results, tuple(doc_name for doc_name, _ in docs))
