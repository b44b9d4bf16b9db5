"""Sample construction and episode-level splitting.

A sample is built for every maximal run of consecutive utterances by one
speaker.  Its candidates are the most recently active distinct speakers
strictly before the run (rank 1 = most recent).  The sample is kept only
when the true speaker is among the candidates and every candidate has
enough history.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..errors import ContractError
from .types import (
    K_MAX,
    MAX_HISTORY,
    MAX_SENTENCE_TOKENS,
    MIN_HISTORY,
    N_MAX_SENTENCES,
    Candidate,
    Sample,
    Utterance,
)


@dataclass
class BuildStats:
    """Filter counters reported by :func:`build_samples`."""

    blocks: int = 0
    emitted: int = 0
    dropped_gold_not_candidate: int = 0
    dropped_thin_history: int = 0

    def merge(self, other: "BuildStats") -> None:
        self.blocks += other.blocks
        self.emitted += other.emitted
        self.dropped_gold_not_candidate += other.dropped_gold_not_candidate
        self.dropped_thin_history += other.dropped_thin_history


def _truncate(u: Utterance, max_tokens: int) -> Utterance:
    if len(u.tokens) <= max_tokens:
        return u
    return Utterance(u.speaker, u.tokens[:max_tokens], u.episode_id, u.seq_index)


def iter_blocks(utterances: list[Utterance]):
    """Yield maximal same-speaker runs as (speaker, [utterances])."""
    block: list[Utterance] = []
    for u in utterances:
        if block and u.speaker != block[-1].speaker:
            yield block[0].speaker, block
            block = []
        block.append(u)
    if block:
        yield block[0].speaker, block


def build_samples(
    utterances: list[Utterance],
    k_max: int = K_MAX,
    min_hist: int = MIN_HISTORY,
    max_hist: int = MAX_HISTORY,
    n_max: int = N_MAX_SENTENCES,
    max_tokens: int = MAX_SENTENCE_TOKENS,
    stats: BuildStats | None = None,
) -> list[Sample]:
    """Build samples from one episode's utterances, in order.

    Current blocks keep their first ``n_max`` sentences; candidate
    histories keep each speaker's last ``max_hist`` utterances before the
    block; sentences are capped at ``max_tokens`` tokens.
    """
    if stats is None:
        stats = BuildStats()
    episode_ids = {u.episode_id for u in utterances}
    if len(episode_ids) > 1:
        raise ContractError(f"build_samples takes one episode, got {sorted(episode_ids)}")
    samples: list[Sample] = []
    history: dict[str, list[Utterance]] = {}
    last_pos: dict[str, int] = {}
    for speaker, block in iter_blocks(utterances):
        stats.blocks += 1
        ranked = sorted(last_pos, key=lambda s: last_pos[s], reverse=True)[:k_max]
        if speaker not in ranked:
            stats.dropped_gold_not_candidate += 1
        elif any(len(history[s]) < min_hist for s in ranked):
            stats.dropped_thin_history += 1
        else:
            candidates = tuple(
                Candidate(
                    speaker=s,
                    recency_rank=rank,
                    history=tuple(_truncate(u, max_tokens) for u in history[s][-max_hist:]),
                )
                for rank, s in enumerate(ranked, start=1)
            )
            samples.append(
                Sample(
                    episode_id=block[0].episode_id,
                    current_block=tuple(_truncate(u, max_tokens) for u in block[:n_max]),
                    candidates=candidates,
                    gold_index=ranked.index(speaker),
                )
            )
            stats.emitted += 1
        for u in block:
            history.setdefault(speaker, []).append(u)
            last_pos[speaker] = u.seq_index
    return samples


def build_corpus_samples(
    utterances: list[Utterance], stats: BuildStats | None = None, **kwargs
) -> list[Sample]:
    """Group a multi-episode utterance list by episode and build samples
    for each episode independently, in first-seen episode order."""
    by_episode: dict[str, list[Utterance]] = {}
    for u in utterances:
        by_episode.setdefault(u.episode_id, []).append(u)
    samples: list[Sample] = []
    for episode_utts in by_episode.values():
        samples.extend(build_samples(episode_utts, stats=stats, **kwargs))
    return samples


def _split_fraction(episode_id: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}:{episode_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64


def split_by_episode(
    samples: list[Sample] | list, ratios: tuple[float, float, float], seed: int
) -> dict[str, list]:
    """Partition samples into train/val/test by a seeded hash of their
    episode id, so no episode straddles two partitions."""
    if len(ratios) != 3:
        raise ContractError(f"expected 3 ratios (train, val, test), got {len(ratios)}")
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ContractError(f"ratios must be positive and sum to 1, got {ratios}")
    episodes = {s.episode_id for s in samples}
    if len(episodes) < 3:
        raise ContractError(f"{len(episodes)} episode(s) cannot fill 3 partitions")
    names = ("train", "val", "test")
    bounds = (ratios[0], ratios[0] + ratios[1])
    out: dict[str, list] = {name: [] for name in names}
    for s in samples:
        f = _split_fraction(s.episode_id, seed)
        if f < bounds[0]:
            out["train"].append(s)
        elif f < bounds[1]:
            out["val"].append(s)
        else:
            out["test"].append(s)
    return out
