"""Combining temporal and content predictions through a gate.

The hybrid distribution is the convex combination

    p_hybrid = (1 - g) * p_temporal + g * p_content

with the gate g obtained three ways: validated on a grid after training
the two predictors separately, trained jointly as one global scalar
(sigmoid-reparameterized to stay in [0, 1]), or computed per sample from
the spread of the content distribution:

    g = sigmoid(w * std(p_content) + b)

where std is the population standard deviation over the k entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, parameter
from .autodiff import ops
from .corpus.types import K_MAX, EncodedSample
from .encoder import EncoderParams, encode_block
from .errors import ContractError
from .metrics import METRIC_NAMES, MetricsReport, PredictionRecord, evaluate
from .speaker_models import (
    ContentModel,
    TemporalModel,
    _EncoderMixin,
    nll_loss,
    predict,
    score_candidates,
    temporal_speaker_vector,
)

GATE_W_INIT = 5.0
GATE_B_INIT = -1.0
DEFAULT_G_GRID = tuple(round(0.05 * i, 2) for i in range(21))


def interpolate(p_temporal: np.ndarray, p_content: np.ndarray, g: float) -> np.ndarray:
    """Elementwise convex combination of two aligned distributions."""
    pt = np.asarray(p_temporal, dtype=np.float64)
    pc = np.asarray(p_content, dtype=np.float64)
    if pt.shape != pc.shape:
        raise ContractError(f"interpolate: length mismatch {pt.shape} vs {pc.shape}")
    if not 0.0 <= g <= 1.0:
        raise ContractError(f"interpolate: gate {g} outside [0, 1]")
    return (1.0 - g) * pt + g * pc


def self_adaptive_gate(p_content: np.ndarray, w: float, b: float) -> float:
    """Per-sample gate from the content distribution's spread."""
    p = np.asarray(p_content, dtype=np.float64)
    std = float(np.sqrt(np.mean((p - p.mean()) ** 2)))
    return float(1.0 / (1.0 + np.exp(-(w * std + b))))


def interpolate_t(p_temporal: Tensor, p_content: Tensor, g: Tensor) -> Tensor:
    """Tape-recorded interpolation; ``g`` is a [1,1] tensor in [0, 1]."""
    if p_temporal.shape != p_content.shape:
        raise ContractError(
            f"interpolate: length mismatch {p_temporal.shape} vs {p_content.shape}"
        )
    one_minus = ops.add_const(ops.scale(g, -1.0), 1.0)
    return ops.add(ops.mul(p_temporal, one_minus), ops.mul(p_content, g))


def adaptive_gate_t(p_content: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Tape-recorded self-adaptive gate, a [1,1] tensor in (0, 1)."""
    std = ops.std_pop(p_content)
    return ops.sigmoid(ops.add(ops.mul(w, std), b))


@dataclass
class GateSweepRow:
    g: float
    report: MetricsReport


@dataclass
class GateSweepResult:
    rows: list[GateSweepRow]
    best_g: dict[str, float]  # per metric
    mean_gold_prob: dict[float, float]

    def table_lines(self) -> list[str]:
        lines = ["g\tmacro_f1\tweighted_f1\tmicro_f1\taccuracy\tmrr"]
        for row in self.rows:
            r = row.report
            lines.append(
                f"{row.g:.2f}\t{r.macro_f1:.6f}\t{r.weighted_f1:.6f}"
                f"\t{r.micro_f1:.6f}\t{r.accuracy:.6f}\t{r.mrr:.6f}"
            )
        return lines


def sweep_gate(temporal_probs: list[np.ndarray], content_probs: list[np.ndarray],
               samples: list, grid=DEFAULT_G_GRID) -> GateSweepResult:
    """Evaluate the interpolation over a gate grid from precomputed
    per-sample distributions.

    The best g per metric maximizes that metric; exact ties prefer the
    higher mean gold probability (the likelihood-leaning choice), and
    remaining ties take the smallest g.
    """
    if not samples:
        raise ContractError("sweep_gate: empty validation set")
    if not all(0.0 <= g <= 1.0 for g in grid):
        raise ContractError("sweep_gate: grid values must lie in [0, 1]")
    rows: list[GateSweepRow] = []
    mean_gold: dict[float, float] = {}
    for g in grid:
        records = []
        gold_p = 0.0
        for pt, pc, sample in zip(temporal_probs, content_probs, samples):
            ph = interpolate(pt, pc, g)
            records.append(PredictionRecord(
                episode_id=sample.episode_id,
                probs=ph,
                predicted_index=predict(ph),
                gold_index=sample.gold_index,
                model_tag=f"hybrid(g={g:.2f})",
            ))
            gold_p += float(ph[sample.gold_index])
        rows.append(GateSweepRow(g=float(g), report=evaluate(records)))
        mean_gold[float(g)] = gold_p / len(samples)
    best: dict[str, float] = {}
    for metric in METRIC_NAMES:
        best[metric] = max(
            rows, key=lambda row: (row.report.value(metric), mean_gold[row.g], -row.g)
        ).g
    return GateSweepResult(rows=rows, best_g=best, mean_gold_prob=mean_gold)


def validate_g(temporal_model, content_model, val_samples: list[EncodedSample],
               metric: str = "macro_f1", grid=DEFAULT_G_GRID) -> tuple[float, GateSweepResult]:
    """Grid-search the gate on validation data using two trained models.

    Models only need a ``predict_proba(sample) -> np.ndarray`` method.
    Returns (best g for ``metric``, the full sweep).
    """
    if not val_samples:
        raise ContractError("validate_g: empty validation set")
    pt = [temporal_model.predict_proba(s) for s in val_samples]
    pc = [content_model.predict_proba(s) for s in val_samples]
    sweep = sweep_gate(pt, pc, val_samples, grid)
    return sweep.best_g[metric], sweep


class _HybridBase(_EncoderMixin):
    """Jointly trained hybrid: one shared block encoder feeding a content
    branch (history encoder) and a temporal branch (rank table)."""

    def __init__(self, vocab_size: int, d: int, rng: np.random.Generator,
                 k_max: int = K_MAX, tie_encoders: bool = False):
        self.d = d
        self.k_max = k_max
        self.tie_encoders = tie_encoders
        self.embeddings = parameter(rng, vocab_size, d)
        self.u_enc = EncoderParams.create(rng, d)
        self.spk_enc = self.u_enc if tie_encoders else EncoderParams.create(rng, d)
        self.rank_table = parameter(rng, k_max, d)

    def _base_parameters(self) -> dict[str, Tensor]:
        out = {"embeddings": self.embeddings, "rank_table": self.rank_table}
        out.update(self.u_enc.named("u_enc"))
        if not self.tie_encoders:
            out.update(self.spk_enc.named("spk_enc"))
        return out

    def _branch_probs(self, sample: EncodedSample, dropout_rate: float,
                      rng: np.random.Generator | None) -> tuple[Tensor, Tensor]:
        u = self._block_u(sample, dropout_rate, rng)
        content_svs = []
        for c in sample.candidates:
            masks = _hist_masks(self, c, dropout_rate, rng)
            content_svs.append(encode_block(c.history, self.embeddings, self.spk_enc, masks))
        p_content = score_candidates(u, content_svs)
        temporal_svs = [
            temporal_speaker_vector(c.recency_rank, self.rank_table)
            for c in sample.candidates
        ]
        p_temporal = score_candidates(u, temporal_svs)
        return p_temporal, p_content

    def sample_probs(self, sample: EncodedSample, dropout_rate: float = 0.0,
                     rng: np.random.Generator | None = None) -> Tensor:
        p_t, p_c = self._branch_probs(sample, dropout_rate, rng)
        return interpolate_t(p_t, p_c, self.gate_value(p_c))

    def batch_loss(self, samples: list[EncodedSample], dropout_rate: float = 0.0,
                   rng: np.random.Generator | None = None) -> Tensor:
        probs = [self.sample_probs(s, dropout_rate, rng) for s in samples]
        return nll_loss(probs, [s.gold_index for s in samples])

    def predict_proba(self, sample: EncodedSample) -> np.ndarray:
        return self.sample_probs(sample).data.reshape(-1)

    def warm_start(self, temporal_arrays: dict | None, content_arrays: dict | None) -> None:
        """Seed branch parameters from separately trained checkpoints.

        The content checkpoint provides the shared encoder and embeddings;
        the temporal checkpoint then contributes only its rank table.
        """
        params = self.parameters()
        if content_arrays:
            for name in ("embeddings", *[n for n in params if n.startswith(("u_enc.", "spk_enc."))]):
                if name in content_arrays:
                    params[name].data = np.array(content_arrays[name], dtype=params[name].data.dtype)
        if temporal_arrays and "rank_table" in temporal_arrays:
            params["rank_table"].data = np.array(
                temporal_arrays["rank_table"], dtype=params["rank_table"].data.dtype
            )


def _hist_masks(model, candidate, dropout_rate, rng):
    if dropout_rate <= 0.0 or rng is None:
        return None
    keep = 1.0 - dropout_rate
    return [Tensor((rng.random((len(s), model.d)) < keep) / keep) for s in candidate.history]


class HybridWhileModel(_HybridBase):
    """One global trainable gate, g = sigmoid(gamma)."""

    kind = "hybrid_while"

    def __init__(self, vocab_size: int, d: int, rng: np.random.Generator,
                 k_max: int = K_MAX, tie_encoders: bool = False):
        super().__init__(vocab_size, d, rng, k_max, tie_encoders)
        self.gamma = Tensor(np.zeros((1, 1)), requires_grad=True)

    def parameters(self) -> dict[str, Tensor]:
        out = self._base_parameters()
        out["gate.gamma"] = self.gamma
        return out

    def gate_value(self, p_content: Tensor) -> Tensor:
        return ops.sigmoid(self.gamma)

    def current_gate(self) -> float:
        return float(1.0 / (1.0 + np.exp(-self.gamma.data[0, 0])))


class HybridAdaptiveModel(_HybridBase):
    """Per-sample gate from the content distribution's spread."""

    kind = "hybrid_adaptive"

    def __init__(self, vocab_size: int, d: int, rng: np.random.Generator,
                 k_max: int = K_MAX, tie_encoders: bool = False):
        super().__init__(vocab_size, d, rng, k_max, tie_encoders)
        self.gate_w = Tensor(np.full((1, 1), GATE_W_INIT), requires_grad=True)
        self.gate_b = Tensor(np.full((1, 1), GATE_B_INIT), requires_grad=True)

    def parameters(self) -> dict[str, Tensor]:
        out = self._base_parameters()
        out["gate.w"] = self.gate_w
        out["gate.b"] = self.gate_b
        return out

    def gate_value(self, p_content: Tensor) -> Tensor:
        return adaptive_gate_t(p_content, self.gate_w, self.gate_b)


class HybridAfterModel:
    """Inference-time interpolation of two separately trained models."""

    kind = "hybrid_after"

    def __init__(self, temporal_model: TemporalModel, content_model: ContentModel, g: float):
        if not 0.0 <= g <= 1.0:
            raise ContractError(f"gate {g} outside [0, 1]")
        self.temporal_model = temporal_model
        self.content_model = content_model
        self.g = g

    def predict_proba(self, sample: EncodedSample) -> np.ndarray:
        return interpolate(
            self.temporal_model.predict_proba(sample),
            self.content_model.predict_proba(sample),
            self.g,
        )
