"""Command-line pipeline: corpus building, training, evaluation, the gate
sweep, and batch prediction.

Every artifact-producing command writes a ``manifest.json`` next to its
outputs capturing the command, its full flag snapshot, and the seed, so
any run can be reproduced from the manifest alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .autodiff import load_checkpoint, save_checkpoint, set_precision
from .corpus import (
    BuildStats,
    Vocabulary,
    build_samples,
    gen_synthetic,
    parse_transcript_with_stats,
    read_samples,
    split_by_episode,
    write_samples,
    write_stats,
)
from .corpus.samples import build_corpus_samples
from .errors import ContractError
from .hybrid import DEFAULT_G_GRID, HybridAfterModel, sweep_gate
from .metrics import METRIC_NAMES, evaluate, format_report_table
from .speaker_models import predict
from .training_eval import (
    BASELINE_KINDS,
    TrainConfig,
    baseline,
    build_model,
    predictions_for,
    train,
)

MANIFEST_FORMAT_VERSION = 1
PREDICTIONS_FORMAT_VERSION = 1

_CLI_MODELS = {
    "temporal": "temporal",
    "content": "content",
    "hybrid-after": "hybrid_after",
    "hybrid-while": "hybrid_while",
    "hybrid-adaptive": "hybrid_adaptive",
}
_CLI_METRICS = {
    "macro-f1": "macro_f1",
    "weighted-f1": "weighted_f1",
    "micro-f1": "micro_f1",
    "acc": "accuracy",
    "mrr": "mrr",
}


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                   inputs: dict, outputs: dict) -> None:
    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "command": command,
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": outputs,
        "written_utc": _utc_now(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ContractError(f"--ratios needs three comma-separated values, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _parse_grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        grid = tuple(round(start + i * step, 10) for i in range(n))
    else:
        grid = tuple(float(x) for x in text.split(","))
    if not grid or any(not 0.0 <= g <= 1.0 for g in grid):
        raise ContractError(f"--g-grid values must lie in [0, 1], got {text!r}")
    return grid


def _write_partitions(out_dir: Path, parts: dict, build_stats: BuildStats,
                      min_count: int) -> dict:
    vocab = Vocabulary.build(parts["train"], min_count=min_count)
    counts = {}
    for name in ("train", "val", "test"):
        n = write_samples(out_dir / f"{name}.jsonl", parts[name])
        counts[name] = {
            "samples": n,
            "episodes": len({s.episode_id for s in parts[name]}),
        }
    vocab.save(out_dir / "vocab.json")
    write_stats(out_dir / "stats.json", counts, extra={
        "blocks": build_stats.blocks,
        "emitted": build_stats.emitted,
        "dropped_gold_not_candidate": build_stats.dropped_gold_not_candidate,
        "dropped_thin_history": build_stats.dropped_thin_history,
        "vocab_size": len(vocab),
    })
    return counts


def _load_corpus(data_dir: Path, splits=("train", "val", "test")):
    vocab = Vocabulary.load(data_dir / "vocab.json")
    encoded = {}
    for name in splits:
        records = read_samples(data_dir / f"{name}.jsonl")
        encoded[name] = [r.encode(vocab) for r in records]
    return vocab, encoded


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        dim=args.dim,
        batch_size=args.batch,
        learning_rate=args.lr,
        dropout=args.dropout,
        patience=args.patience,
        max_epochs=args.max_epochs,
        seed=args.seed,
        metric=_CLI_METRICS[args.metric],
        precision=args.precision,
        attention=args.attention,
        tie_encoders=args.tie_encoders,
        temporal_bias_only=args.temporal_bias_only,
    )


def _model_meta(kind: str, cfg: TrainConfig, vocab_size: int) -> dict:
    return {
        "model": kind,
        "dim": cfg.dim,
        "vocab_size": vocab_size,
        "k_max": cfg.k_max,
        "attention": cfg.attention,
        "tie_encoders": cfg.tie_encoders,
        "temporal_bias_only": cfg.temporal_bias_only,
    }


def _model_from_checkpoint(path: Path, expected_vocab: int | None = None):
    arrays, meta = load_checkpoint(path)
    cfg = TrainConfig(
        dim=meta["dim"],
        metric="macro_f1",
        attention=meta.get("attention", "off"),
        tie_encoders=meta.get("tie_encoders", False),
        temporal_bias_only=meta.get("temporal_bias_only", False),
        k_max=meta.get("k_max", 5),
    )
    if expected_vocab is not None and meta["vocab_size"] != expected_vocab:
        raise ContractError(
            f"{path}: checkpoint vocab size {meta['vocab_size']} != corpus vocab {expected_vocab}"
        )
    rng = np.random.default_rng(0)
    if meta["model"] == "hybrid_after":
        t_arrays = {k[len("temporal/"):]: v for k, v in arrays.items() if k.startswith("temporal/")}
        c_arrays = {k[len("content/"):]: v for k, v in arrays.items() if k.startswith("content/")}
        t_model = build_model("temporal", meta["vocab_size"], cfg, rng)
        c_model = build_model("content", meta["vocab_size"], cfg, rng)
        t_model.load_arrays(t_arrays)
        c_model.load_arrays(c_arrays)
        g_per_metric = meta["g_per_metric"]
        model = HybridAfterModel(t_model, c_model, g_per_metric[meta.get("metric", "macro_f1")])
        return model, meta, g_per_metric
    model = build_model(meta["model"], meta["vocab_size"], cfg, rng)
    model.load_arrays(arrays)
    return model, meta, None


# ---------------------------------------------------------------- commands


def cmd_build_corpus(args) -> int:
    in_dir = Path(args.data)
    out_dir = Path(args.out)
    files = sorted(in_dir.glob("*.txt"))
    if not files:
        print(f"error: no *.txt transcripts found in {in_dir}", file=sys.stderr)
        return 1
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = BuildStats()
    samples = []
    skipped_lines = 0
    for path in files:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return 1
        utterances, pstats = parse_transcript_with_stats(text, episode_id=path.stem)
        skipped_lines += pstats.skipped_preamble_lines
        samples.extend(build_samples(utterances, stats=stats))
    if not samples:
        print(
            "error: no samples survived filtering "
            f"(blocks={stats.blocks}, gold-not-candidate={stats.dropped_gold_not_candidate}, "
            f"thin-history={stats.dropped_thin_history})",
            file=sys.stderr,
        )
        return 1
    parts = split_by_episode(samples, _parse_ratios(args.ratios), seed=args.seed)
    counts = _write_partitions(out_dir, parts, stats, args.min_count)
    write_manifest(out_dir, "build-corpus", args,
                   inputs={"transcripts": len(files), "skipped_preamble_lines": skipped_lines},
                   outputs={"partitions": counts})
    print(f"built corpus in {out_dir}: " + ", ".join(f"{k}={v['samples']}" for k, v in counts.items()))
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    utterances = gen_synthetic(args.kind, args.episodes, seed=args.seed,
                               blocks_per_episode=args.blocks)
    stats = BuildStats()
    samples = build_corpus_samples(utterances, stats=stats)
    parts = split_by_episode(samples, _parse_ratios(args.ratios), seed=args.seed)
    counts = _write_partitions(out_dir, parts, stats, args.min_count)
    write_manifest(out_dir, "synth", args,
                   inputs={"kind": args.kind, "episodes": args.episodes},
                   outputs={"partitions": counts})
    print(f"synthesized {args.kind} corpus in {out_dir}: "
          + ", ".join(f"{k}={v['samples']}" for k, v in counts.items()))
    return 0


def _train_single(kind: str, cfg: TrainConfig, enc: dict, vocab_size: int, out_dir: Path,
                  tag: str = "") -> dict:
    result = train(kind, enc["train"], enc["val"], vocab_size, cfg)
    prefix = f"{tag}-" if tag else ""
    ckpt_paths = {}
    for metric in METRIC_NAMES:
        meta = _model_meta(kind, cfg, vocab_size)
        meta["metric"] = metric
        meta["best_value"] = result.best_values[metric]
        meta["best_epoch"] = result.best_epochs[metric]
        path = out_dir / f"{prefix}ckpt-best-{metric.replace('_', '-')}.ckpt"
        save_checkpoint(path, result.best_params[metric], meta)
        ckpt_paths[metric] = str(path)
    (out_dir / f"{prefix}training_log.txt").write_text(
        "\n".join(result.log_lines) + "\n", encoding="utf-8"
    )
    return {"result": result, "checkpoints": ckpt_paths}


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    set_precision(cfg.precision)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_dir = Path(args.data)
    vocab, enc = _load_corpus(data_dir, splits=("train", "val"))
    kind = _CLI_MODELS[args.model]
    outputs: dict = {}
    if kind == "hybrid_after":
        t_out = _train_single("temporal", cfg, enc, len(vocab), out_dir, tag="temporal")
        c_out = _train_single("content", cfg, enc, len(vocab), out_dir, tag="content")
        t_model = t_out["result"].load_best(cfg.metric)
        c_model = c_out["result"].load_best(cfg.metric)
        pt = [t_model.predict_proba(s) for s in enc["val"]]
        pc = [c_model.predict_proba(s) for s in enc["val"]]
        sweep = sweep_gate(pt, pc, enc["val"], grid=_parse_grid(args.g_grid))
        bundle = {f"temporal/{k}": v for k, v in t_model.export_arrays().items()}
        bundle.update({f"content/{k}": v for k, v in c_model.export_arrays().items()})
        meta = _model_meta("hybrid_after", cfg, len(vocab))
        meta["metric"] = cfg.metric
        meta["g_per_metric"] = sweep.best_g
        bundle_path = out_dir / "ckpt-hybrid-after.ckpt"
        save_checkpoint(bundle_path, bundle, meta)
        (out_dir / "gate_sweep.tsv").write_text("\n".join(sweep.table_lines()) + "\n", encoding="utf-8")
        outputs = {
            "bundle": str(bundle_path),
            "g_per_metric": sweep.best_g,
            "temporal_checkpoints": t_out["checkpoints"],
            "content_checkpoints": c_out["checkpoints"],
        }
        print(f"trained hybrid-after; validated gates: {sweep.best_g}")
    else:
        single = _train_single(kind, cfg, enc, len(vocab), out_dir)
        outputs = {"checkpoints": single["checkpoints"],
                   "best_values": single["result"].best_values}
        print(f"trained {args.model}; best {cfg.metric} = "
              f"{single['result'].best_values[cfg.metric]:.4f} "
              f"(epoch {single['result'].best_epochs[cfg.metric]})")
    write_manifest(out_dir, "train", args, inputs={"data": str(data_dir)}, outputs=outputs)
    return 0


def cmd_eval(args) -> int:
    set_precision(args.precision)
    data_dir = Path(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab, enc = _load_corpus(data_dir, splits=("train", args.split))
    eval_samples = enc[args.split]
    rows = []
    for name in BASELINE_KINDS:
        rows.append((f"{name} guess", baseline(name, enc["train"], eval_samples, seed=args.seed)))
    reports: dict[str, dict] = {name: rep.as_dict() for name, rep in rows}
    for ckpt in args.checkpoint or []:
        model, meta, g_per_metric = _model_from_checkpoint(Path(ckpt), expected_vocab=len(vocab))
        if g_per_metric is not None:
            # one row per metric-selected gate, scored by that metric's column
            for metric, g in sorted(g_per_metric.items()):
                model.g = g
                rep = evaluate(predictions_for(model, eval_samples, f"hybrid_after[g={g:.2f}]"))
                name = f"hybrid-after (g={g:.2f}, by {metric})"
                rows.append((name, rep))
                reports[name] = rep.as_dict()
        else:
            rep = evaluate(predictions_for(model, eval_samples, meta["model"]))
            rows.append((meta["model"], rep))
            reports[meta["model"]] = rep.as_dict()
    table = format_report_table(rows)
    print(table)
    (out_dir / "report.txt").write_text(table + "\n", encoding="utf-8")
    (out_dir / "report.json").write_text(json.dumps(reports, indent=2), encoding="utf-8")
    write_manifest(out_dir, "eval", args,
                   inputs={"data": str(data_dir), "split": args.split,
                           "checkpoints": list(args.checkpoint or [])},
                   outputs={"report": str(out_dir / "report.json")})
    return 0


def cmd_sweep_gate(args) -> int:
    set_precision(args.precision)
    data_dir = Path(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab, enc = _load_corpus(data_dir, splits=("val",))
    t_model, _, _ = _model_from_checkpoint(Path(args.temporal_ckpt), expected_vocab=len(vocab))
    c_model, _, _ = _model_from_checkpoint(Path(args.content_ckpt), expected_vocab=len(vocab))
    pt = [t_model.predict_proba(s) for s in enc["val"]]
    pc = [c_model.predict_proba(s) for s in enc["val"]]
    sweep = sweep_gate(pt, pc, enc["val"], grid=_parse_grid(args.g_grid))
    table = "\n".join(sweep.table_lines())
    print(table)
    print("best g per metric:", json.dumps(sweep.best_g, sort_keys=True))
    (out_dir / "gate_sweep.tsv").write_text(table + "\n", encoding="utf-8")
    (out_dir / "best_g.json").write_text(
        json.dumps({"format_version": 1, "best_g": sweep.best_g}, indent=2), encoding="utf-8"
    )
    write_manifest(out_dir, "sweep-gate", args,
                   inputs={"data": str(data_dir)},
                   outputs={"best_g": sweep.best_g})
    return 0


def cmd_predict(args) -> int:
    set_precision(args.precision)
    data_dir = Path(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab, enc = _load_corpus(data_dir, splits=(args.split,))
    model, meta, _ = _model_from_checkpoint(Path(args.checkpoint), expected_vocab=len(vocab))
    tag = meta["model"]
    path = out_dir / "predictions.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format_version": PREDICTIONS_FORMAT_VERSION}) + "\n")
        for s in enc[args.split]:
            probs = model.predict_proba(s)
            record = {
                "episode_id": s.episode_id,
                "probs": [float(p) for p in probs],
                "predicted": predict(probs),
                "gold": s.gold_index,
                "model": tag,
            }
            fh.write(json.dumps(record) + "\n")
    write_manifest(out_dir, "predict", args,
                   inputs={"data": str(data_dir), "checkpoint": args.checkpoint},
                   outputs={"predictions": str(path)})
    print(f"wrote {len(enc[args.split])} prediction records to {path}")
    return 0


# ---------------------------------------------------------------- parser


def _add_common_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=100, help="width of every neural layer")
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3, help="Adam step size")
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--max-epochs", type=int, default=30)
    p.add_argument("--metric", choices=sorted(_CLI_METRICS), default="macro-f1")
    p.add_argument("--attention", choices=("off", "static"), default="off")
    p.add_argument("--tie-encoders", action="store_true",
                   help="share the block encoder with the speaker-history encoder")
    p.add_argument("--temporal-bias-only", action="store_true",
                   help="ablation: temporal scores from per-rank biases, ignoring u")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speakerclf",
        description="Speaker classification pipeline for multi-party dialog transcripts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-corpus", help="parse transcripts and build sample partitions")
    p.add_argument("--data", required=True, help="directory of per-episode *.txt transcripts")
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("synth", help="generate a planted-signal synthetic corpus")
    p.add_argument("--kind", choices=("temporal", "content", "mixed"), required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--blocks", type=int, default=60, help="speaker blocks per episode")
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one model on a processed corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=sorted(_CLI_MODELS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=("f32", "f64"), default="f64")
    p.add_argument("--g-grid", default="0:1:0.05")
    _add_common_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score checkpoints and guess baselines on a partition")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", action="append", default=[])
    p.add_argument("--split", choices=("val", "test"), default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=("f32", "f64"), default="f64")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-gate", help="grid-search the interpolation gate on validation")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--temporal-ckpt", required=True)
    p.add_argument("--content-ckpt", required=True)
    p.add_argument("--g-grid", default="0:1:0.05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=("f32", "f64"), default="f64")
    p.set_defaults(func=cmd_sweep_gate)

    p = sub.add_parser("predict", help="emit per-sample prediction records")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=("f32", "f64"), default="f64")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
