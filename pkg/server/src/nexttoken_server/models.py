"""Probability sources the server can wrap.

The mock table model is the reference implementation: a JSON file of weight
rows keyed by context length, needing no ML stack at all. The causal-LM
adapter wraps any Hugging Face model; it is imported lazily so the mock
path stays dependency-free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class MockTableModel:
    """Deterministic weights: row index is the clamped context length."""

    vocab_id: str
    size: int
    rows: tuple[tuple[float, ...], ...]

    @classmethod
    def from_file(cls, path) -> "MockTableModel":
        with open(path) as fh:
            spec = json.load(fh)
        vocab_id = spec.get("vocab")
        size = spec.get("size")
        rows = spec.get("rows")
        if not isinstance(vocab_id, str) or not vocab_id:
            raise ValueError("mock table needs a non-empty 'vocab' string")
        if not isinstance(size, int) or size < 2:
            raise ValueError("mock table needs an integer 'size' of at least 2")
        if not isinstance(rows, list) or not rows:
            raise ValueError("mock table needs at least one weight row")
        parsed = []
        for i, row in enumerate(rows):
            if len(row) != size:
                raise ValueError(f"row {i} has {len(row)} weights, expected {size}")
            weights = tuple(float(w) for w in row)
            if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
                raise ValueError(f"row {i} must be non-negative with a positive entry")
            parsed.append(weights)
        return cls(vocab_id, size, tuple(parsed))

    def probs(self, context: list[int]) -> list[float]:
        return list(self.rows[min(len(context), len(self.rows) - 1)])


class CausalLmModel:
    """Greedy, sampling-free wrapper around a Hugging Face causal LM.

    Inference runs under no_grad in float32 on CPU by default; identical
    contexts give identical distributions within one process.
    """

    def __init__(self, model_name: str, device: str = "cpu") -> None:
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForCausalLM.from_pretrained(
            model_name, torch_dtype=torch.float32
        )
        self.model.to(device).eval()
        self._device = device
        self.vocab_id = f"hf:{model_name}"
        self.size = int(self.model.get_input_embeddings().weight.shape[0])

    def probs(self, context: list[int]) -> list[float]:
        torch = self._torch
        with torch.no_grad():
            if context:
                ids = torch.tensor([context], dtype=torch.long, device=self._device)
                logits = self.model(input_ids=ids).logits[0, -1, :]
            else:
                bos = self.tokenizer.bos_token_id
                if bos is None:
                    return [1.0 / self.size] * self.size
                ids = torch.tensor([[bos]], dtype=torch.long, device=self._device)
                logits = self.model(input_ids=ids).logits[0, -1, :]
            probs = torch.softmax(logits.float(), dim=-1)
        return probs.cpu().tolist()
