"""Evaluation metrics: macro/weighted/micro F1, accuracy, and MRR.

Classes are the recency ranks of the gold candidates (candidate sets
differ per sample, so speaker names cannot serve as classes).  In this
single-label setting micro F1 always equals accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

METRIC_NAMES = ("macro_f1", "weighted_f1", "micro_f1", "accuracy", "mrr")


@dataclass
class ClassScores:
    label: object
    support: int
    precision: float
    recall: float
    f1: float


@dataclass
class MetricsReport:
    macro_f1: float
    weighted_f1: float
    micro_f1: float
    accuracy: float
    mrr: float | None
    n_samples: int
    per_class: list[ClassScores] = field(default_factory=list)

    def value(self, metric: str) -> float:
        if metric not in METRIC_NAMES:
            raise ContractError(f"unknown metric {metric!r}, expected one of {METRIC_NAMES}")
        v = getattr(self, metric)
        if v is None:
            raise ContractError(f"metric {metric!r} is not available for this report")
        return v

    def as_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "micro_f1": self.micro_f1,
            "accuracy": self.accuracy,
            "mrr": self.mrr,
            "n_samples": self.n_samples,
            "per_class": [
                {"label": c.label, "support": c.support, "precision": c.precision,
                 "recall": c.recall, "f1": c.f1}
                for c in self.per_class
            ],
        }


@dataclass
class PredictionRecord:
    """Per-sample prediction output."""

    episode_id: str
    probs: np.ndarray
    predicted_index: int
    gold_index: int
    model_tag: str

    def as_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "probs": [float(p) for p in self.probs],
            "predicted": self.predicted_index,
            "gold": self.gold_index,
            "model": self.model_tag,
        }


def reciprocal_rank(probs: np.ndarray, gold_index: int) -> float:
    """1 / (1 + candidates strictly ahead of the gold + tied candidates
    at a lower recency rank), matching the argmax tie-break."""
    p = np.asarray(probs, dtype=np.float64)
    g = p[gold_index]
    ahead = int((p > g).sum())
    tied_before = int((p[:gold_index] == g).sum())
    return 1.0 / (1 + ahead + tied_before)


def metrics_from_labels(gold, predicted, reciprocal_ranks=None) -> MetricsReport:
    """Compute the report from parallel label lists (any hashable labels)."""
    if len(gold) == 0:
        raise ContractError("evaluate: empty prediction list")
    if len(gold) != len(predicted):
        raise ContractError("evaluate: gold/predicted length mismatch")
    labels = sorted(set(gold) | set(predicted))
    tp = {lab: 0 for lab in labels}
    fp = {lab: 0 for lab in labels}
    fn = {lab: 0 for lab in labels}
    correct = 0
    for g, p in zip(gold, predicted):
        if g == p:
            tp[g] += 1
            correct += 1
        else:
            fp[p] += 1
            fn[g] += 1
    per_class = []
    for lab in labels:
        denom_p = tp[lab] + fp[lab]
        denom_r = tp[lab] + fn[lab]
        precision = tp[lab] / denom_p if denom_p else 0.0
        recall = tp[lab] / denom_r if denom_r else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(ClassScores(lab, denom_r, precision, recall, f1))
    n = len(gold)
    macro = sum(c.f1 for c in per_class) / len(per_class)
    weighted = sum(c.f1 * c.support for c in per_class) / n
    pooled_tp = sum(tp.values())
    pooled_fp = sum(fp.values())
    pooled_fn = sum(fn.values())
    micro_p = pooled_tp / (pooled_tp + pooled_fp) if pooled_tp + pooled_fp else 0.0
    micro_r = pooled_tp / (pooled_tp + pooled_fn) if pooled_tp + pooled_fn else 0.0
    micro = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    mrr = float(np.mean(reciprocal_ranks)) if reciprocal_ranks is not None else None
    return MetricsReport(
        macro_f1=macro,
        weighted_f1=weighted,
        micro_f1=micro,
        accuracy=correct / n,
        mrr=mrr,
        n_samples=n,
        per_class=per_class,
    )


def evaluate(records: list[PredictionRecord]) -> MetricsReport:
    """Score prediction records; classes are gold/predicted recency ranks
    (index + 1, candidates being rank-sorted)."""
    gold = [r.gold_index + 1 for r in records]
    pred = [r.predicted_index + 1 for r in records]
    rrs = [reciprocal_rank(r.probs, r.gold_index) for r in records]
    return metrics_from_labels(gold, pred, rrs)


def format_report_table(rows: list[tuple[str, MetricsReport]]) -> str:
    """Render model rows x metric columns, percentages to two decimals."""
    header = f"{'Model':<34}{'Macro F1':>10}{'Weighted F1':>13}{'Micro F1':>10}{'Acc.':>8}{'MRR':>8}"
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        mrr = f"{100 * rep.mrr:.2f}" if rep.mrr is not None else "N/A"
        lines.append(
            f"{name:<34}{100 * rep.macro_f1:>10.2f}{100 * rep.weighted_f1:>13.2f}"
            f"{100 * rep.micro_f1:>10.2f}{100 * rep.accuracy:>8.2f}{mrr:>8}"
        )
    return "\n".join(lines)
