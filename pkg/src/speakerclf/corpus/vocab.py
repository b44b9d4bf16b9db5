"""Token vocabulary and integer encoding of samples."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import numpy as np

from ..errors import ContractError
from .types import EncodedCandidate, EncodedSample, Sample

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

VOCAB_FORMAT_VERSION = 1


class Vocabulary:
    """Dense token -> id map with reserved padding and unknown ids."""

    def __init__(self, token_to_id: dict[str, int]):
        self.token_to_id = token_to_id

    def __len__(self) -> int:
        return len(self.token_to_id) + 2

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    @classmethod
    def build(cls, samples: list[Sample], min_count: int = 1) -> "Vocabulary":
        """Count tokens over current blocks and candidate histories of the
        training partition; tokens below ``min_count`` map to the unknown id."""
        if not samples:
            raise ContractError("cannot build a vocabulary from an empty training set")
        counts: Counter[str] = Counter()
        for s in samples:
            for u in s.current_block:
                counts.update(u.tokens)
            for c in s.candidates:
                for u in c.history:
                    counts.update(u.tokens)
        kept = sorted(
            (t for t, n in counts.items() if n >= min_count),
            key=lambda t: (-counts[t], t),
        )
        return cls({t: i + 2 for i, t in enumerate(kept)})

    def encode_tokens(self, tokens) -> np.ndarray:
        return np.array([self.id_of(t) for t in tokens], dtype=np.int64)

    def encode_sample(self, sample: Sample) -> EncodedSample:
        return EncodedSample(
            episode_id=sample.episode_id,
            current=[self.encode_tokens(u.tokens) for u in sample.current_block],
            candidates=[
                EncodedCandidate(
                    recency_rank=c.recency_rank,
                    history=[self.encode_tokens(u.tokens) for u in c.history],
                )
                for c in sample.candidates
            ],
            gold_index=sample.gold_index,
        )

    def save(self, path) -> None:
        payload = {
            "format_version": VOCAB_FORMAT_VERSION,
            "pad": {"token": PAD_TOKEN, "id": PAD_ID},
            "unk": {"token": UNK_TOKEN, "id": UNK_ID},
            "tokens": self.token_to_id,
        }
        Path(path).write_text(json.dumps(payload, indent=0, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format_version") != VOCAB_FORMAT_VERSION:
            raise ContractError(f"{path}: unsupported vocabulary format version")
        return cls({t: int(i) for t, i in payload["tokens"].items()})
