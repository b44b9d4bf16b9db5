"""Raw transcript parsing.

Input convention: one UTF-8 file per episode, ``SPEAKER NAME: text``
lines.  Lines without a speaker prefix continue the previous utterance;
parenthesized stage directions are stripped.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .types import Utterance

logger = logging.getLogger(__name__)

# A speaker tag is an all-caps prefix before the first colon, e.g.
# "ANNA:", "DR. POL:", "UNIDENTIFIED MALE:".  Lowercase letters before
# the colon mean the line is a continuation.
_SPEAKER_RE = re.compile(r"^([A-Z][A-Z0-9 .,'\-]*):\s*(.*)$")
_STAGE_RE = re.compile(r"\([^)]*\)")
_TOKEN_RE = re.compile(r"[a-z0-9']+|[^\sa-z0-9']")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation; punctuation marks
    become their own tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class ParseStats:
    skipped_preamble_lines: int = 0
    dropped_empty_utterances: int = 0


def parse_transcript(raw_text: str, episode_id: str) -> list[Utterance]:
    """Parse one episode; see :func:`parse_transcript_with_stats`."""
    utterances, stats = parse_transcript_with_stats(raw_text, episode_id)
    if stats.skipped_preamble_lines:
        logger.warning(
            "%s: skipped %d line(s) before the first speaker tag",
            episode_id, stats.skipped_preamble_lines,
        )
    return utterances


def parse_transcript_with_stats(raw_text: str, episode_id: str) -> tuple[list[Utterance], ParseStats]:
    """Group lines into speaker-attributed utterances.

    Consecutive lines under one speaker tag form one utterance; names are
    uppercased and whitespace-normalized; utterances left empty after
    stage-direction stripping are dropped.
    """
    stats = ParseStats()
    groups: list[tuple[str, list[str]]] = []
    current: tuple[str, list[str]] | None = None
    for line in raw_text.splitlines():
        line = line.strip()
        if not line:
            continue
        m = _SPEAKER_RE.match(line)
        if m:
            if current is not None:
                groups.append(current)
            name = " ".join(m.group(1).split()).upper()
            current = (name, [m.group(2)])
        elif current is None:
            stats.skipped_preamble_lines += 1
        else:
            current[1].append(line)
    if current is not None:
        groups.append(current)

    utterances: list[Utterance] = []
    for name, lines in groups:
        text = _STAGE_RE.sub(" ", " ".join(lines))
        tokens = tokenize(text)
        if not tokens:
            stats.dropped_empty_utterances += 1
            continue
        utterances.append(
            Utterance(speaker=name, tokens=tuple(tokens),
                      episode_id=episode_id, seq_index=len(utterances))
        )
    return utterances, stats
