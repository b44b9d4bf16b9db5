"""Synthetic corpora with planted temporal or content signals.

Three generators, all over a fixed pool of speakers per episode:

* ``temporal`` — the next block's speaker is the most recently active
  *eligible* speaker (a new block can never continue the previous
  block's speaker, so eligibility excludes it) with probability
  ``p_repeat``; otherwise uniform over the remaining eligible speakers.
  Utterance tokens are drawn from one shared vocabulary, so recency is
  the only signal.  With a pool of 5 and the 5-candidate window this
  plants the gold at recency rank 2 with probability ``p_repeat``.
* ``content`` — the next block's speaker is uniform over the eligible
  speakers, and every utterance draws at least 60% of its tokens from
  the speaker's own keyword vocabulary (keyword sets are disjoint across
  speakers).  Content is the only signal; the gold rank is uniform over
  the feasible ranks.
* ``mixed`` — content-style vocabularies with temporal-style speaker
  selection: both signals present.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .types import Utterance

POOL_SIZE = 5
P_REPEAT = 0.75
KEYWORDS_PER_SPEAKER = 8
COMMON_TOKENS = 30

KINDS = ("temporal", "content", "mixed")


def _speaker_names(pool_size: int) -> list[str]:
    return [f"SPEAKER {chr(ord('A') + i)}" for i in range(pool_size)]


def _keyword_sets(pool_size: int) -> list[list[str]]:
    return [
        [f"kw{i}x{j}" for j in range(KEYWORDS_PER_SPEAKER)]
        for i in range(pool_size)
    ]


def _common_tokens() -> list[str]:
    return [f"word{j}" for j in range(COMMON_TOKENS)]


def _pick_speaker(kind: str, rng: np.random.Generator, pool: list[str],
                  current: str | None, recency: list[str], p_repeat: float) -> str:
    """Choose the next block's speaker under the kind's selection law.

    ``recency`` lists speakers by last activity, most recent first.
    """
    eligible = [s for s in pool if s != current]
    spoken = [s for s in recency if s != current]
    if kind == "content" or len(spoken) < 2:
        return eligible[rng.integers(len(eligible))]
    partner = spoken[0]
    if rng.random() < p_repeat:
        return partner
    others = [s for s in eligible if s != partner]
    return others[rng.integers(len(others))]


def _utterance_tokens(kind: str, rng: np.random.Generator, speaker_idx: int,
                      keywords: list[list[str]], common: list[str]) -> tuple[str, ...]:
    length = int(rng.integers(5, 11))
    if kind == "temporal":
        ids = rng.integers(len(common), size=length)
        return tuple(common[i] for i in ids)
    own = keywords[speaker_idx]
    n_own = int(np.ceil(0.7 * length))
    tokens = [own[rng.integers(len(own))] for _ in range(n_own)]
    tokens += [common[rng.integers(len(common))] for _ in range(length - n_own)]
    perm = rng.permutation(length)
    return tuple(tokens[i] for i in perm)


def gen_synthetic(
    kind: str,
    n_episodes: int,
    seed: int,
    blocks_per_episode: int = 60,
    pool_size: int = POOL_SIZE,
    p_repeat: float = P_REPEAT,
) -> list[Utterance]:
    """Generate ``n_episodes`` episodes of the requested kind.

    Deterministic in ``seed``; episodes use independent child streams so
    the output does not depend on generation order.
    """
    if kind not in KINDS:
        raise ContractError(f"unknown synthetic kind {kind!r}, expected one of {KINDS}")
    if n_episodes <= 0:
        raise ContractError(f"n_episodes must be positive, got {n_episodes}")
    pool = _speaker_names(pool_size)
    keywords = _keyword_sets(pool_size)
    common = _common_tokens()
    streams = np.random.SeedSequence(seed).spawn(n_episodes)
    utterances: list[Utterance] = []
    for ep in range(n_episodes):
        rng = np.random.default_rng(streams[ep])
        episode_id = f"{kind}-ep{ep:04d}"
        recency: list[str] = []
        current: str | None = None
        seq = 0
        for _ in range(blocks_per_episode):
            speaker = _pick_speaker(kind, rng, pool, current, recency, p_repeat)
            speaker_idx = pool.index(speaker)
            for _ in range(int(rng.integers(1, 3))):
                utterances.append(
                    Utterance(
                        speaker=speaker,
                        tokens=_utterance_tokens(kind, rng, speaker_idx, keywords, common),
                        episode_id=episode_id,
                        seq_index=seq,
                    )
                )
                seq += 1
            if speaker in recency:
                recency.remove(speaker)
            recency.insert(0, speaker)
            current = speaker
    return utterances


def speaker_keyword_sets(pool_size: int = POOL_SIZE) -> dict[str, frozenset[str]]:
    """The planted per-speaker keyword vocabularies (disjoint by construction)."""
    names = _speaker_names(pool_size)
    sets = _keyword_sets(pool_size)
    return {name: frozenset(kw) for name, kw in zip(names, sets)}
