"""Speaker vectors and candidate scoring.

A speaker is represented either by an encoding of what they recently
said (content) or by a trainable embedding of their recency rank
(temporal).  Either way, candidate ``i`` scores ``s_i . u`` against the
current block vector ``u`` and the scores normalize over the sample's
own k candidates, so the candidate set size may vary freely.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, parameter, zeros_parameter
from .autodiff import ops
from .corpus.types import K_MAX, EncodedSample
from .encoder import AttentionParams, EncoderParams, attend_block, encode_block
from .errors import ContractError

PROB_FLOOR = 1e-12


def temporal_speaker_vector(rank: int, table: Tensor) -> Tensor:
    """Row ``rank-1`` of the rank embedding table."""
    if not 1 <= rank <= table.shape[0]:
        raise ContractError(f"recency rank {rank} outside [1, {table.shape[0]}]")
    return ops.rows(table, [rank - 1])


def score_candidates(u: Tensor, speaker_vectors: list[Tensor]) -> Tensor:
    """Probabilities [k, 1] from exp(s_i . u), normalized over the k
    candidates with max-subtraction stability."""
    if not speaker_vectors:
        raise ContractError("score_candidates: empty candidate list")
    d = u.shape[1]
    for s in speaker_vectors:
        if s.shape != (1, d):
            raise ContractError(f"speaker vector shape {s.shape} does not match u {u.shape}")
    stacked = speaker_vectors[0] if len(speaker_vectors) == 1 else ops.concat_rows(speaker_vectors)
    logits = ops.matmul(stacked, ops.transpose(u))
    return ops.softmax(logits)


def predict(probs: np.ndarray) -> int:
    """Index of the most probable candidate; ties go to the lowest
    recency rank (candidates are rank-sorted, so the lowest index)."""
    return int(np.argmax(probs))


def nll_loss(prob_tensors: list[Tensor], gold_indices: list[int]) -> Tensor:
    """Mean over the batch of -log p[gold], with p floored at 1e-12."""
    terms = []
    for probs, gold in zip(prob_tensors, gold_indices):
        p_gold = ops.rows(probs, [gold])
        terms.append(ops.scale(ops.log(ops.clamp_min(p_gold, PROB_FLOOR)), -1.0))
    stacked = terms[0] if len(terms) == 1 else ops.concat_rows(terms)
    return ops.mean_all(stacked)


def _dropout_masks(shapes: list[tuple[int, int]], rate: float,
                   rng: np.random.Generator | None) -> list[Tensor] | None:
    if rate <= 0.0 or rng is None:
        return None
    keep = 1.0 - rate
    return [Tensor((rng.random(shape) < keep) / keep) for shape in shapes]


class _EncoderMixin:
    """Shared plumbing: embeddings + the current-block encoder."""

    embeddings: Tensor
    u_enc: EncoderParams
    d: int

    def _block_u(self, sample: EncodedSample, dropout_rate: float,
                 rng: np.random.Generator | None) -> Tensor:
        masks = _dropout_masks([(len(s), self.d) for s in sample.current], dropout_rate, rng)
        u = encode_block(sample.current, self.embeddings, self.u_enc, masks)
        out_mask = _dropout_masks([(1, self.d)], dropout_rate, rng)
        return ops.mul(u, out_mask[0]) if out_mask else u

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        for name, arr in arrays.items():
            if name not in params:
                raise ContractError(f"checkpoint parameter {name!r} unknown to {type(self).__name__}")
            if tuple(params[name].shape) != tuple(arr.shape):
                raise ContractError(
                    f"checkpoint parameter {name!r} shape {arr.shape} != model {params[name].shape}"
                )
            params[name].data = np.array(arr, dtype=params[name].data.dtype)

    def export_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}


class ContentModel(_EncoderMixin):
    """Speakers modeled by a hierarchical encoding of their own history."""

    kind = "content"

    def __init__(self, vocab_size: int, d: int, rng: np.random.Generator,
                 tie_encoders: bool = False, attention: str = "off"):
        if attention not in ("off", "static"):
            raise ContractError(f"attention must be 'off' or 'static', got {attention!r}")
        self.d = d
        self.tie_encoders = tie_encoders
        self.attention = attention
        self.embeddings = parameter(rng, vocab_size, d)
        self.u_enc = EncoderParams.create(rng, d)
        self.spk_enc = self.u_enc if tie_encoders else EncoderParams.create(rng, d)
        self.attn = AttentionParams.create(rng, d) if attention == "static" else None

    def parameters(self) -> dict[str, Tensor]:
        out = {"embeddings": self.embeddings}
        out.update(self.u_enc.named("u_enc"))
        if not self.tie_encoders:
            out.update(self.spk_enc.named("spk_enc"))
        if self.attn is not None:
            out.update(self.attn.named("attn"))
        return out

    def speaker_vector(self, candidate, dropout_rate: float = 0.0,
                       rng: np.random.Generator | None = None) -> Tensor:
        """Encode a candidate's history (oldest first) with the
        speaker-side encoder."""
        masks = _dropout_masks([(len(s), self.d) for s in candidate.history], dropout_rate, rng)
        s = encode_block(candidate.history, self.embeddings, self.spk_enc, masks)
        out_mask = _dropout_masks([(1, self.d)], dropout_rate, rng)
        return ops.mul(s, out_mask[0]) if out_mask else s

    def sample_probs(self, sample: EncodedSample, dropout_rate: float = 0.0,
                     rng: np.random.Generator | None = None) -> Tensor:
        svs = [self.speaker_vector(c, dropout_rate, rng) for c in sample.candidates]
        if self.attn is None:
            u = self._block_u(sample, dropout_rate, rng)
            return score_candidates(u, svs)
        # Attention conditions u on each candidate, so score pairwise.
        logits = []
        for s in svs:
            u_i = attend_block(sample.current, s, self.embeddings, self.u_enc, self.attn)
            logits.append(ops.matmul(s, ops.transpose(u_i)))
        stacked = logits[0] if len(logits) == 1 else ops.concat_rows(logits)
        return ops.softmax(stacked)

    def batch_loss(self, samples: list[EncodedSample], dropout_rate: float = 0.0,
                   rng: np.random.Generator | None = None) -> Tensor:
        probs = [self.sample_probs(s, dropout_rate, rng) for s in samples]
        return nll_loss(probs, [s.gold_index for s in samples])

    def predict_proba(self, sample: EncodedSample) -> np.ndarray:
        return self.sample_probs(sample).data.reshape(-1)


class TemporalModel(_EncoderMixin):
    """Speakers modeled by a trainable embedding of their recency rank."""

    kind = "temporal"

    def __init__(self, vocab_size: int, d: int, rng: np.random.Generator,
                 k_max: int = K_MAX, bias_only: bool = False):
        self.d = d
        self.k_max = k_max
        self.bias_only = bias_only
        if bias_only:
            self.rank_bias = zeros_parameter(k_max, 1)
        else:
            self.embeddings = parameter(rng, vocab_size, d)
            self.u_enc = EncoderParams.create(rng, d)
            self.rank_table = parameter(rng, k_max, d)

    def parameters(self) -> dict[str, Tensor]:
        if self.bias_only:
            return {"rank_bias": self.rank_bias}
        out = {"embeddings": self.embeddings, "rank_table": self.rank_table}
        out.update(self.u_enc.named("u_enc"))
        return out

    def sample_probs(self, sample: EncodedSample, dropout_rate: float = 0.0,
                     rng: np.random.Generator | None = None) -> Tensor:
        ranks = [c.recency_rank for c in sample.candidates]
        if self.bias_only:
            logits = ops.rows(self.rank_bias, [r - 1 for r in ranks])
            return ops.softmax(logits)
        u = self._block_u(sample, dropout_rate, rng)
        svs = [temporal_speaker_vector(r, self.rank_table) for r in ranks]
        return score_candidates(u, svs)

    def batch_loss(self, samples: list[EncodedSample], dropout_rate: float = 0.0,
                   rng: np.random.Generator | None = None) -> Tensor:
        probs = [self.sample_probs(s, dropout_rate, rng) for s in samples]
        return nll_loss(probs, [s.gold_index for s in samples])

    def predict_proba(self, sample: EncodedSample) -> np.ndarray:
        return self.sample_probs(sample).data.reshape(-1)
