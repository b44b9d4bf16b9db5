"""Corpus domain types."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ContractError

K_MAX = 5
MIN_HISTORY = 3
MAX_HISTORY = 5
N_MAX_SENTENCES = 5
MAX_SENTENCE_TOKENS = 50


@dataclass(frozen=True)
class Utterance:
    """One speaker-attributed line group of a transcript."""

    speaker: str
    tokens: tuple[str, ...]
    episode_id: str
    seq_index: int


@dataclass(frozen=True)
class Candidate:
    """A possible author of the current block.

    ``recency_rank`` 1 means the most recently heard speaker; ``history``
    holds the candidate's last 3-5 utterances, most recent last.
    """

    speaker: str
    recency_rank: int
    history: tuple[Utterance, ...]


@dataclass(frozen=True)
class Sample:
    """One classification instance: a block of consecutive utterances by
    one speaker plus the ranked candidate speakers around it."""

    episode_id: str
    current_block: tuple[Utterance, ...]
    candidates: tuple[Candidate, ...]
    gold_index: int

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def n(self) -> int:
        return len(self.current_block)

    @property
    def gold_rank(self) -> int:
        return self.candidates[self.gold_index].recency_rank


def validate_sample(sample: Sample, min_hist: int = MIN_HISTORY,
                    max_hist: int = MAX_HISTORY, k_max: int = K_MAX) -> None:
    """Raise ContractError if any structural invariant is broken."""
    if not 0 <= sample.gold_index < sample.k:
        raise ContractError(f"gold_index {sample.gold_index} outside [0, {sample.k})")
    if sample.k > k_max:
        raise ContractError(f"{sample.k} candidates exceeds k_max={k_max}")
    if not sample.current_block:
        raise ContractError("empty current block")
    speakers = {u.speaker for u in sample.current_block}
    if len(speakers) != 1:
        raise ContractError(f"current block mixes speakers {sorted(speakers)}")
    if sample.candidates[sample.gold_index].speaker != sample.current_block[0].speaker:
        raise ContractError("gold candidate name differs from the block speaker")
    ranks = [c.recency_rank for c in sample.candidates]
    if sorted(ranks) != list(range(1, sample.k + 1)):
        raise ContractError(f"recency ranks {ranks} are not 1..k")
    if ranks != sorted(ranks):
        raise ContractError("candidates are not sorted by recency rank")
    block_keys = {(u.episode_id, u.seq_index) for u in sample.current_block}
    for cand in sample.candidates:
        if not min_hist <= len(cand.history) <= max_hist:
            raise ContractError(
                f"candidate {cand.speaker} history length {len(cand.history)} "
                f"outside [{min_hist}, {max_hist}]"
            )
        for u in cand.history:
            if (u.episode_id, u.seq_index) in block_keys:
                raise ContractError("candidate history overlaps the current block")
            if u.speaker != cand.speaker:
                raise ContractError("history utterance by a different speaker")


@dataclass
class EncodedCandidate:
    recency_rank: int
    history: list  # list of int64 id arrays, oldest first


@dataclass
class EncodedSample:
    """Integer-id view of a Sample, ready for the models."""

    episode_id: str
    current: list  # list of int64 id arrays, one per sentence
    candidates: list[EncodedCandidate] = field(default_factory=list)
    gold_index: int = 0

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def gold_rank(self) -> int:
        return self.candidates[self.gold_index].recency_rank
