"""Training loops, guess baselines, and validation-tracked checkpoints.

Training minimizes mean cross-entropy with Adam, evaluates all five
metrics on validation every epoch, keeps the best parameter snapshot
per metric, and stops once the selection metric has not improved for
``patience`` epochs.  Batches group samples with equal candidate count
and are shuffled per epoch from the run seed; everything downstream of
the seed is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Tape, adam_step, init_adam
from .corpus.types import K_MAX, EncodedSample
from .errors import ContractError, TrainingDiverged
from .hybrid import HybridAdaptiveModel, HybridWhileModel
from .metrics import METRIC_NAMES, MetricsReport, PredictionRecord, evaluate, metrics_from_labels
from .speaker_models import ContentModel, TemporalModel, predict

MODEL_KINDS = ("temporal", "content", "hybrid_while", "hybrid_adaptive")
BASELINE_KINDS = ("random", "majority", "hybrid_guess")
DROPOUT_GRID = (0.0, 0.2, 0.5)


@dataclass
class TrainConfig:
    dim: int = 100
    batch_size: int = 10
    learning_rate: float = 1e-3
    dropout: float = 0.0
    patience: int = 3
    max_epochs: int = 30
    seed: int = 0
    metric: str = "macro_f1"
    k_max: int = K_MAX
    precision: str = "f64"
    attention: str = "off"
    tie_encoders: bool = False
    temporal_bias_only: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ContractError("dropout must lie in [0, 1)")
        if self.metric not in METRIC_NAMES:
            raise ContractError(f"unknown metric {self.metric!r}")


@dataclass
class TrainResult:
    model: object
    best_params: dict[str, dict[str, np.ndarray]]  # metric -> arrays
    best_values: dict[str, float]
    best_epochs: dict[str, int]
    log_lines: list[str]
    epochs_run: int
    initial_loss: float
    epoch_losses: list[float] = field(default_factory=list)

    def load_best(self, metric: str) -> object:
        """Restore the model to its best validation snapshot for ``metric``."""
        self.model.load_arrays(self.best_params[metric])
        return self.model


def build_model(kind: str, vocab_size: int, config: TrainConfig, rng: np.random.Generator):
    if kind == "content":
        return ContentModel(vocab_size, config.dim, rng,
                            tie_encoders=config.tie_encoders, attention=config.attention)
    if kind == "temporal":
        return TemporalModel(vocab_size, config.dim, rng, k_max=config.k_max,
                             bias_only=config.temporal_bias_only)
    if kind == "hybrid_while":
        return HybridWhileModel(vocab_size, config.dim, rng, k_max=config.k_max,
                                tie_encoders=config.tie_encoders)
    if kind == "hybrid_adaptive":
        return HybridAdaptiveModel(vocab_size, config.dim, rng, k_max=config.k_max,
                                   tie_encoders=config.tie_encoders)
    raise ContractError(f"unknown model kind {kind!r}, expected one of {MODEL_KINDS}")


def make_batches(samples: list[EncodedSample], batch_size: int,
                 rng: np.random.Generator) -> list[list[EncodedSample]]:
    """Bucket samples by candidate count, chunk each bucket, and shuffle
    the batch order."""
    buckets: dict[int, list[EncodedSample]] = {}
    for s in samples:
        buckets.setdefault(s.k, []).append(s)
    batches: list[list[EncodedSample]] = []
    for k in sorted(buckets):
        bucket = buckets[k]
        order = rng.permutation(len(bucket))
        for lo in range(0, len(bucket), batch_size):
            batches.append([bucket[i] for i in order[lo:lo + batch_size]])
    batch_order = rng.permutation(len(batches))
    return [batches[i] for i in batch_order]


def predictions_for(model, samples: list[EncodedSample], tag: str) -> list[PredictionRecord]:
    records = []
    for s in samples:
        probs = model.predict_proba(s)
        records.append(PredictionRecord(
            episode_id=s.episode_id,
            probs=probs,
            predicted_index=predict(probs),
            gold_index=s.gold_index,
            model_tag=tag,
        ))
    return records


def dataset_loss(model, samples: list[EncodedSample], batch_size: int = 50) -> float:
    """Forward-only mean cross-entropy over a sample list."""
    total = 0.0
    for lo in range(0, len(samples), batch_size):
        chunk = samples[lo:lo + batch_size]
        total += model.batch_loss(chunk).item() * len(chunk)
    return total / len(samples)


def train(model_kind: str, train_samples: list[EncodedSample],
          val_samples: list[EncodedSample], vocab_size: int,
          config: TrainConfig, model=None) -> TrainResult:
    """Train one model kind; see the module docstring for the loop contract."""
    if not train_samples:
        raise ContractError("train: empty training partition")
    if not val_samples:
        raise ContractError("train: empty validation partition")
    seed_seq = np.random.SeedSequence(config.seed)
    init_stream, epoch_stream = seed_seq.spawn(2)
    if model is None:
        model = build_model(model_kind, vocab_size, config, np.random.default_rng(init_stream))
    params = model.parameters()
    adam = init_adam(params, alpha=config.learning_rate)

    initial_loss = dataset_loss(model, train_samples)
    log_lines = [f"init train_loss={initial_loss:.6f}"]
    best_values: dict[str, float] = {}
    best_params: dict[str, dict[str, np.ndarray]] = {}
    best_epochs: dict[str, int] = {}
    epoch_losses: list[float] = []
    epochs_without_gain = 0
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        rng = np.random.default_rng(epoch_stream.spawn(1)[0])
        running = 0.0
        seen = 0
        for batch in make_batches(train_samples, config.batch_size, rng):
            with Tape() as tape:
                loss = model.batch_loss(batch, dropout_rate=config.dropout, rng=rng)
            loss_val = loss.item()
            if not math.isfinite(loss_val):
                raise TrainingDiverged(
                    f"{model_kind}: non-finite loss at epoch {epoch} after {seen} samples"
                )
            tape.backward(loss)
            adam_step(params, adam)
            for p in params.values():
                p.zero_grad()
            running += loss_val * len(batch)
            seen += len(batch)
        epoch_loss = running / seen
        epoch_losses.append(epoch_loss)
        epochs_run = epoch

        report = evaluate(predictions_for(model, val_samples, model_kind))
        improved_selection = False
        for metric in METRIC_NAMES:
            value = report.value(metric)
            if metric not in best_values or value > best_values[metric]:
                best_values[metric] = value
                best_params[metric] = model.export_arrays()
                best_epochs[metric] = epoch
                if metric == config.metric:
                    improved_selection = True
        log_lines.append(
            f"epoch {epoch} train_loss={epoch_loss:.6f} "
            + " ".join(f"val_{m}={report.value(m):.6f}" for m in METRIC_NAMES)
        )
        if improved_selection:
            epochs_without_gain = 0
        else:
            epochs_without_gain += 1
            if epochs_without_gain >= config.patience:
                log_lines.append(f"early stop after epoch {epoch}")
                break

    return TrainResult(
        model=model,
        best_params=best_params,
        best_values=best_values,
        best_epochs=best_epochs,
        log_lines=log_lines,
        epochs_run=epochs_run,
        initial_loss=initial_loss,
        epoch_losses=epoch_losses,
    )


def _rank_counts(samples) -> dict[int, int]:
    counts: dict[int, int] = {}
    for s in samples:
        counts[s.gold_rank] = counts.get(s.gold_rank, 0) + 1
    return counts


def baseline(kind: str, train_samples, eval_samples, seed: int = 0) -> MetricsReport:
    """Guess baselines over recency-rank classes.

    random: uniform over each sample's candidates.  majority: always the
    training partition's most frequent gold rank, falling back to rank 1
    when that rank is absent from a sample.  hybrid_guess: sample each
    prediction from the training gold-rank distribution, renormalized
    over the ranks the sample actually offers.  None of these produce
    probability rankings, so MRR is reported as not applicable.
    """
    if kind not in BASELINE_KINDS:
        raise ContractError(f"unknown baseline {kind!r}, expected one of {BASELINE_KINDS}")
    if not eval_samples:
        raise ContractError("baseline: empty evaluation partition")
    rng = np.random.default_rng(seed)
    gold = [s.gold_rank for s in eval_samples]
    if kind == "random":
        pred = [int(rng.integers(s.k)) + 1 for s in eval_samples]
    elif kind == "majority":
        counts = _rank_counts(train_samples)
        majority = max(sorted(counts), key=lambda r: counts[r])
        pred = [majority if majority <= s.k else 1 for s in eval_samples]
    else:
        counts = _rank_counts(train_samples)
        ranks = np.array(sorted(counts))
        weights = np.array([counts[r] for r in ranks], dtype=np.float64)
        pred = []
        for s in eval_samples:
            mask = ranks <= s.k
            w = weights[mask]
            pred.append(int(rng.choice(ranks[mask], p=w / w.sum())))
    return metrics_from_labels(gold, pred, reciprocal_ranks=None)


def chance_accuracy(samples) -> float:
    """Expected accuracy of uniform guessing: mean of 1/k."""
    return float(np.mean([1.0 / s.k for s in samples]))
