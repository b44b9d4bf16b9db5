"""Processed-corpus files: JSONL sample partitions and the stats sidecar.

Every file starts with (or contains) a format-version field.  Sample
lines carry exactly the fields {episode_id, current, candidates, gold};
the file's first line is a header object with the version.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ContractError
from .types import EncodedCandidate, EncodedSample, Sample
from .vocab import Vocabulary

SAMPLES_FORMAT_VERSION = 1
STATS_FORMAT_VERSION = 1


@dataclass
class CandidateRecord:
    name: str
    rank: int
    history: list[list[str]]


@dataclass
class SampleRecord:
    """Serialized view of a sample: token strings, no utterance metadata."""

    episode_id: str
    current: list[list[str]]
    candidates: list[CandidateRecord]
    gold: int

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def gold_index(self) -> int:
        return self.gold

    @property
    def gold_rank(self) -> int:
        return self.candidates[self.gold].rank

    def encode(self, vocab: Vocabulary) -> EncodedSample:
        return EncodedSample(
            episode_id=self.episode_id,
            current=[vocab.encode_tokens(s) for s in self.current],
            candidates=[
                EncodedCandidate(
                    recency_rank=c.rank,
                    history=[vocab.encode_tokens(s) for s in c.history],
                )
                for c in self.candidates
            ],
            gold_index=self.gold,
        )


def record_from_sample(sample: Sample) -> SampleRecord:
    return SampleRecord(
        episode_id=sample.episode_id,
        current=[list(u.tokens) for u in sample.current_block],
        candidates=[
            CandidateRecord(
                name=c.speaker,
                rank=c.recency_rank,
                history=[list(u.tokens) for u in c.history],
            )
            for c in sample.candidates
        ],
        gold=sample.gold_index,
    )


def write_samples(path, samples: list[Sample]) -> int:
    """Write one partition as JSONL; returns the sample count."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format_version": SAMPLES_FORMAT_VERSION}) + "\n")
        for s in samples:
            r = record_from_sample(s)
            fh.write(json.dumps({
                "episode_id": r.episode_id,
                "current": r.current,
                "candidates": [
                    {"name": c.name, "rank": c.rank, "history": c.history}
                    for c in r.candidates
                ],
                "gold": r.gold,
            }) + "\n")
    return len(samples)


def read_samples(path) -> list[SampleRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ContractError(f"{path}: empty samples file")
    header = json.loads(lines[0])
    if header.get("format_version") != SAMPLES_FORMAT_VERSION:
        raise ContractError(f"{path}: unsupported samples format version")
    records = []
    for line in lines[1:]:
        obj = json.loads(line)
        records.append(SampleRecord(
            episode_id=obj["episode_id"],
            current=obj["current"],
            candidates=[
                CandidateRecord(name=c["name"], rank=int(c["rank"]), history=c["history"])
                for c in obj["candidates"]
            ],
            gold=int(obj["gold"]),
        ))
    return records


def write_stats(path, partition_counts: dict[str, dict[str, int]], extra: dict | None = None) -> None:
    payload = {
        "format_version": STATS_FORMAT_VERSION,
        "partitions": partition_counts,
    }
    if extra:
        payload["build"] = extra
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def read_stats(path) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != STATS_FORMAT_VERSION:
        raise ContractError(f"{path}: unsupported stats format version")
    return payload
