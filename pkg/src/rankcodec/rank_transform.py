"""Token-to-rank transform and its exact inverse.

Each token is replaced by its position in the candidate list sorted by the
predictor's probability for that step (ties broken by token id ascending,
which makes the per-step mapping a bijection). A good predictor turns text
into a stream dominated by small integers, which the entropy backends then
squeeze. The inverse replays the same predictions, so encoder and decoder
must drive predictors with identical state.

Ranks are 0-based: a perfectly predicted token becomes rank 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptStream, VocabMismatch
from .predictor import Predictor, TokenSequence, Vocabulary

__all__ = ["RankSequence", "tokens_to_ranks", "ranks_to_tokens"]


@dataclass(frozen=True)
class RankSequence:
    """Per-step candidate-list positions, same length as the source tokens."""

    vocab: Vocabulary
    ranks: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        size = self.vocab.size
        for r in self.ranks:
            if not 0 <= r < size:
                raise ValueError(f"rank {r} outside vocabulary of size {size}")

    def __len__(self) -> int:
        return len(self.ranks)


def _check_vocab(predictor: Predictor, vocab: Vocabulary) -> None:
    if predictor.vocab != vocab:
        raise VocabMismatch(
            f"sequence uses vocabulary {vocab.identifier!r} (size {vocab.size}), "
            f"predictor expects {predictor.vocab.identifier!r} (size {predictor.vocab.size})"
        )


def tokens_to_ranks(predictor: Predictor, tokens: TokenSequence) -> RankSequence:
    """Map each token to its position in that step's sorted candidate list.

    The candidate order is probability descending, token id ascending. The
    rank is computed by counting rather than sorting: the number of strictly
    more probable tokens plus the number of equally probable tokens with a
    smaller id, which is exactly the token's index in the sorted order.
    """
    _check_vocab(predictor, tokens.vocab)
    ranks: list[int] = []
    context: list[int] = []
    for tok in tokens.tokens:
        probs = predictor.probs_for(context)
        p_tok = probs[tok]
        rank = int(np.count_nonzero(probs > p_tok))
        rank += int(np.count_nonzero(probs[:tok] == p_tok))
        ranks.append(rank)
        context.append(tok)
    return RankSequence(tokens.vocab, tuple(ranks))


def ranks_to_tokens(predictor: Predictor, ranks: RankSequence) -> TokenSequence:
    """Invert :func:`tokens_to_ranks`, feeding each recovered token back in."""
    _check_vocab(predictor, ranks.vocab)
    size = ranks.vocab.size
    ids = np.arange(size)
    context: list[int] = []
    for rank in ranks.ranks:
        if rank >= size:
            raise CorruptStream(f"rank {rank} outside vocabulary of size {size}")
        probs = predictor.probs_for(context)
        # lexsort's last key is primary: probability descending, then id.
        order = np.lexsort((ids, -probs))
        context.append(int(order[rank]))
    return TokenSequence(ranks.vocab, tuple(context))
