"""Hierarchical recurrent encoding of utterance blocks.

A word-level LSTM reads each sentence's token embeddings and its last
state becomes the sentence vector; a sentence-level LSTM reads the
sentence vectors in order and its last state is the block vector.  Both
levels are single-direction, single-layer, and share one width ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, parameter
from .autodiff import ops
from .errors import ContractError


@dataclass
class LstmParams:
    """Packed-gate LSTM cell weights: wx [Din,4H], wh [H,4H], b [1,4H]."""

    wx: Tensor
    wh: Tensor
    b: Tensor

    @classmethod
    def create(cls, rng: np.random.Generator, d_in: int, d_hidden: int) -> "LstmParams":
        b = np.zeros((1, 4 * d_hidden))
        b[0, d_hidden:2 * d_hidden] = 1.0  # forget gate opens at init
        return cls(
            wx=parameter(rng, d_in, 4 * d_hidden),
            wh=parameter(rng, d_hidden, 4 * d_hidden),
            b=Tensor(b, requires_grad=True),
        )

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.wx": self.wx, f"{prefix}.wh": self.wh, f"{prefix}.b": self.b}


@dataclass
class EncoderParams:
    """Word- and sentence-level cells of one hierarchical encoder."""

    word: LstmParams
    sent: LstmParams

    @classmethod
    def create(cls, rng: np.random.Generator, d: int) -> "EncoderParams":
        return cls(word=LstmParams.create(rng, d, d), sent=LstmParams.create(rng, d, d))

    def named(self, prefix: str) -> dict[str, Tensor]:
        out = self.word.named(f"{prefix}.word")
        out.update(self.sent.named(f"{prefix}.sent"))
        return out


@dataclass
class AttentionParams:
    """Additive attention over sentence vectors, queried by a speaker vector."""

    wq: Tensor  # [d, d] applied to sentence vectors
    wk: Tensor  # [d, d] applied to the speaker vector
    v: Tensor   # [d, 1] score projection
    b: Tensor   # [1, d]

    @classmethod
    def create(cls, rng: np.random.Generator, d: int) -> "AttentionParams":
        return cls(
            wq=parameter(rng, d, d),
            wk=parameter(rng, d, d),
            v=parameter(rng, d, 1),
            b=Tensor(np.zeros((1, d)), requires_grad=True),
        )

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}.wq": self.wq,
            f"{prefix}.wk": self.wk,
            f"{prefix}.v": self.v,
            f"{prefix}.b": self.b,
        }


def encode_sentence(token_ids: np.ndarray, embeddings: Tensor, word: LstmParams,
                    dropout_mask: Tensor | None = None) -> Tensor:
    """Final word-level hidden state [1, d] for one sentence."""
    if len(token_ids) == 0:
        raise ContractError("encode_sentence: empty sentence")
    x = ops.rows(embeddings, token_ids)
    if dropout_mask is not None:
        x = ops.mul(x, dropout_mask)
    h = ops.lstm_seq(x, word.wx, word.wh, word.b)
    return ops.rows(h, [h.shape[0] - 1])


def sentence_vectors(sentences: list[np.ndarray], embeddings: Tensor, word: LstmParams,
                     dropout_masks: list[Tensor] | None = None) -> Tensor:
    """Stack all sentence vectors of a block into an [N, d] tensor."""
    if not sentences:
        raise ContractError("encode_block: empty block")
    vecs = [
        encode_sentence(s, embeddings, word, dropout_masks[i] if dropout_masks else None)
        for i, s in enumerate(sentences)
    ]
    return vecs[0] if len(vecs) == 1 else ops.concat_rows(vecs)


def encode_block(sentences: list[np.ndarray], embeddings: Tensor, enc: EncoderParams,
                 dropout_masks: list[Tensor] | None = None) -> Tensor:
    """Block vector [1, d]: last state of the sentence-level cell run over
    the word-level sentence vectors, in order."""
    vs = sentence_vectors(sentences, embeddings, enc.word, dropout_masks)
    hs = ops.lstm_seq(vs, enc.sent.wx, enc.sent.wh, enc.sent.b)
    return ops.rows(hs, [hs.shape[0] - 1])


def attend_block(sentences: list[np.ndarray], speaker_vec: Tensor, embeddings: Tensor,
                 enc: EncoderParams, attn: AttentionParams,
                 dropout_masks: list[Tensor] | None = None) -> Tensor:
    """Speaker-conditioned block vector (the optional attention variant).

    Additive attention scores the sentence vectors against the speaker
    vector; the softmax-weighted mix is fed through a single
    sentence-level cell step.  Uniform weights therefore reduce to the
    mean sentence vector through that step.
    """
    vs = sentence_vectors(sentences, embeddings, enc.word, dropout_masks)
    query = ops.matmul(speaker_vec, attn.wk)  # [1, d]
    keys = ops.matmul(vs, attn.wq)            # [N, d]
    scores = ops.matmul(ops.tanh(ops.add(keys, ops.add(query, attn.b))), attn.v)  # [N, 1]
    weights = ops.softmax(scores)
    context = ops.matmul(ops.transpose(weights), vs)  # [1, d]
    hs = ops.lstm_seq(context, enc.sent.wx, enc.sent.wh, enc.sent.b)
    return ops.rows(hs, [0])


def attention_weights(sentences: list[np.ndarray], speaker_vec: Tensor, embeddings: Tensor,
                      enc: EncoderParams, attn: AttentionParams) -> np.ndarray:
    """Forward-only attention weights, for inspection and tests."""
    vs = sentence_vectors(sentences, embeddings, enc.word)
    query = ops.matmul(speaker_vec, attn.wk)
    keys = ops.matmul(vs, attn.wq)
    scores = ops.matmul(ops.tanh(ops.add(keys, ops.add(query, attn.b))), attn.v)
    return ops.softmax(scores).data.reshape(-1)
