"""Transcript parsing, sample construction, splits, and synthetic corpora."""

from .io import (
    CandidateRecord,
    SampleRecord,
    read_samples,
    read_stats,
    record_from_sample,
    write_samples,
    write_stats,
)
from .samples import (
    BuildStats,
    build_corpus_samples,
    build_samples,
    iter_blocks,
    split_by_episode,
)
from .synthetic import KINDS, gen_synthetic, speaker_keyword_sets
from .transcript import ParseStats, parse_transcript, parse_transcript_with_stats, tokenize
from .types import (
    K_MAX,
    MAX_HISTORY,
    MIN_HISTORY,
    N_MAX_SENTENCES,
    Candidate,
    EncodedCandidate,
    EncodedSample,
    Sample,
    Utterance,
    validate_sample,
)
from .vocab import PAD_ID, UNK_ID, Vocabulary

__all__ = [
    "BuildStats",
    "Candidate",
    "CandidateRecord",
    "EncodedCandidate",
    "EncodedSample",
    "K_MAX",
    "KINDS",
    "MAX_HISTORY",
    "MIN_HISTORY",
    "N_MAX_SENTENCES",
    "PAD_ID",
    "ParseStats",
    "Sample",
    "SampleRecord",
    "UNK_ID",
    "Utterance",
    "Vocabulary",
    "build_corpus_samples",
    "build_samples",
    "gen_synthetic",
    "iter_blocks",
    "parse_transcript",
    "parse_transcript_with_stats",
    "read_samples",
    "read_stats",
    "record_from_sample",
    "speaker_keyword_sets",
    "split_by_episode",
    "tokenize",
    "validate_sample",
    "write_samples",
    "write_stats",
]
