"""Pipeline driver: partition -> symbolize -> train -> evaluate -> predict.

Every artifact embeds the digest of the effective config and the seed,
and downstream stages verify the partition digest recorded upstream, so
a mixed-up partition file fails fast instead of silently mis-symbolizing.
All files are written atomically and contain no timestamps, making reruns
with identical inputs byte-identical (training wall times go only to the
log file).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .checkpoint import Checkpoint
from .classifier import EventSequenceClassifier
from .data import (
    assemble_sequences,
    load_frame,
    make_partitioner,
    parse_schema,
    prepare_frame,
    read_symbolized,
    write_symbolized,
)
from .exceptions import ConfigError, DataError, NumericError
from .labeling import window_inputs, window_samples
from .metrics import evaluation_report
from .neuralcore.training import score_samples
from .partitioning import SymbolicPartitioner, VariableSpec
from .utils import atomic_write_text, canonical_json, sha256_file, sha256_hex

PARTITION_KIND = "symevent.partition"

DEFAULT_CONFIG = {
    "schema": None,
    "partition": {"alphabet_size": 4, "method": "quantile", "unknown_slot": False},
    "downsample": {"factor": 1, "mode": "stride"},
    "labeling": {"horizon": 1, "history": 0, "use_temporal_weights": True, "include_truncated": False},
    "embedding": {"variant": "symbol_scalar", "dim": None, "min_count": 2, "min_rel_freq": None, "init_scale": None},
    "network": {
        "encoder": [{"kind": "lstm", "units": 8}],
        "head": [],
        "chop": 1,
        "learning_rate": 0.001,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "dtype": "float32",
    },
    "training": {
        "epochs": 10,
        "batch_size": 1,
        "patience": None,
        "shuffle": True,
        "validation_fraction": 0.0,
        "max_fpr": 0.05,
    },
    "seed": 0,
}


def _merge(defaults, override, path="config"):
    if override is None:
        return defaults
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ConfigError(f"{path} must be an object")
        unknown = set(override) - set(defaults)
        if unknown and path != "config.schema":
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        merged = {}
        for key, default in defaults.items():
            merged[key] = _merge(default, override.get(key), f"{path}.{key}") if key in override else default
        return merged
    return override


def load_config(path, seed_override=None):
    """Read, default-fill, and digest the pipeline config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = {}
    for key, default in DEFAULT_CONFIG.items():
        if key == "schema":
            cfg[key] = raw.get(key)
        else:
            cfg[key] = _merge(default, raw.get(key), f"config.{key}")
    unknown = set(raw) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")
    if seed_override is not None:
        cfg["seed"] = seed_override
    digest = sha256_hex(canonical_json(cfg).encode("utf-8"))
    return cfg, digest


def _json_safe(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _sanitize_report(report):
    out = dict(report)
    out["threshold"] = _json_safe(report["threshold"])
    out["roc"] = [[fpr, tpr, _json_safe(thr)] for fpr, tpr, thr in report["roc"]]
    return out


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path, obj):
    atomic_write_text(path, canonical_json(obj) + "\n")


def load_partition(path):
    """Partition file -> (list of VariableSpec, file digest)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if doc.get("kind") != PARTITION_KIND:
        raise ConfigError(f"{path}: not a partition file")
    specs = [VariableSpec.from_dict(v) for v in doc["variables"]]
    return specs, sha256_file(path)


def _prepared(cfg, data_path):
    if not cfg["schema"]:
        raise ConfigError("config lacks a schema section")
    columns = parse_schema(cfg["schema"])
    frame = load_frame(data_path)
    frame = prepare_frame(
        frame,
        columns,
        downsample_factor=int(cfg["downsample"]["factor"]),
        downsample_mode=cfg["downsample"]["mode"],
    )
    return columns, frame


def cmd_partition(args):
    cfg, digest = load_config(args.config, args.seed)
    columns, frame = _prepared(cfg, args.data)
    part = make_partitioner(
        columns,
        default_alphabet=int(cfg["partition"]["alphabet_size"]),
        default_method=cfg["partition"]["method"],
        unknown_slot=bool(cfg["partition"]["unknown_slot"]),
    )
    names = [c.name for c in columns]
    part.fit(frame[names])
    out = _ensure_out(args.out)
    _write_json(
        os.path.join(out, "partition.json"),
        {
            "kind": PARTITION_KIND,
            "version": 1,
            "variables": [v.to_dict() for v in part.variables_],
            "config_digest": digest,
            "seed": cfg["seed"],
        },
    )
    symbols = part.transform(frame[names])
    hist = []
    for i, spec in enumerate(part.variables_):
        counts = np.bincount(symbols[:, i], minlength=spec.alphabet_size).tolist()
        entry = {"name": spec.name, "kind": spec.kind, "counts": counts}
        if spec.kind == "continuous":
            entry["splits"] = list(spec.splits)
        else:
            entry["categories"] = list(spec.categories)
        hist.append(entry)
    _write_json(
        os.path.join(out, "histograms.json"),
        {"kind": "symevent.histograms", "variables": hist, "config_digest": digest, "seed": cfg["seed"]},
    )
    print(f"wrote {os.path.join(out, 'partition.json')} ({len(part.variables_)} variables)")
    return 0


def cmd_symbolize(args):
    cfg, digest = load_config(args.config, args.seed)
    specs, part_digest = load_partition(args.partition)
    columns, frame = _prepared(cfg, args.data)
    names = [c.name for c in columns]
    spec_names = [s.name for s in specs]
    if names != spec_names:
        raise ConfigError(f"schema columns {names} do not match partition variables {spec_names}")
    part = SymbolicPartitioner.from_variable_specs(specs)
    symbols = part.transform(frame[names])
    sequences = assemble_sequences(frame, symbols)
    out = _ensure_out(args.out)
    path = os.path.join(out, args.name)
    write_symbolized(
        path,
        sequences,
        {
            "variables": spec_names,
            "alphabet_sizes": [s.alphabet_size for s in specs],
            "partition_digest": part_digest,
            "config_digest": digest,
            "seed": cfg["seed"],
        },
    )
    n_clips = sum(len(s) for s in sequences)
    print(f"wrote {path} ({len(sequences)} entities, {n_clips} clips)")
    return 0


def cmd_train(args):
    cfg, digest = load_config(args.config, args.seed)
    specs, part_digest = load_partition(args.partition)
    sequences, _ = read_symbolized(args.data, expect_digest=part_digest)
    emb = cfg["embedding"]
    net = cfg["network"]
    lab = cfg["labeling"]
    trn = cfg["training"]
    clf = EventSequenceClassifier(
        variables=specs,
        embedding=emb["variant"],
        embed_dim=emb["dim"],
        encoder=tuple(net["encoder"]),
        head=tuple(net["head"]),
        chop=int(net["chop"]),
        horizon=int(lab["horizon"]),
        history=int(lab["history"]),
        use_temporal_weights=bool(lab["use_temporal_weights"]),
        include_truncated=bool(lab["include_truncated"]),
        vocab_min_count=emb["min_count"],
        vocab_min_rel_freq=emb["min_rel_freq"],
        init_scale=emb["init_scale"],
        epochs=int(trn["epochs"]),
        batch_size=int(trn["batch_size"]),
        patience=trn["patience"],
        shuffle=bool(trn["shuffle"]),
        learning_rate=float(net["learning_rate"]),
        beta1=float(net["beta1"]),
        beta2=float(net["beta2"]),
        epsilon=float(net["epsilon"]),
        dtype=net["dtype"],
        max_fpr=float(trn["max_fpr"]),
        validation_fraction=float(trn["validation_fraction"]),
        seed=int(cfg["seed"]),
    )
    clf.fit(sequences)
    result = clf.training_result_
    out = _ensure_out(args.out)
    log_lines = [canonical_json(rec) for rec in result.history]
    atomic_write_text(os.path.join(out, "training_log.jsonl"), "\n".join(log_lines) + "\n")
    metadata = {
        "seed": cfg["seed"],
        "config_digest": digest,
        "epochs_run": result.epochs_run,
        "best_epoch": result.best_epoch,
        "final_train_loss": result.history[-1]["train_loss"],
        "threshold": _json_safe(result.val_threshold),
        "threshold_source": result.threshold_source,
    }
    ckpt = Checkpoint.from_network(
        clf.network_, specs, clf._labeling_config(), clf.vocabulary_, part_digest, metadata
    )
    ckpt_path = os.path.join(out, "checkpoint.bin")
    ckpt.save(ckpt_path)
    _write_json(
        os.path.join(out, "manifest.json"),
        {
            "kind": "symevent.manifest",
            "config_digest": digest,
            "partition_digest": part_digest,
            "checkpoint_digest": sha256_file(ckpt_path),
            "seed": cfg["seed"],
            "embedding": emb["variant"],
            "epochs_run": result.epochs_run,
            "best_epoch": result.best_epoch,
        },
    )
    last = result.history[-1]
    val = "" if last["val_auc"] is None else f", val_auc={last['val_auc']:.4f}"
    print(f"wrote {ckpt_path} (epochs={result.epochs_run}, train_loss={last['train_loss']:.4f}{val})")
    return 0


def _load_model(checkpoint_path):
    try:
        ckpt = Checkpoint.load(checkpoint_path)
    except OSError as exc:
        raise DataError(f"{checkpoint_path}: {exc}") from exc
    return ckpt, ckpt.build_network()


def cmd_evaluate(args):
    ckpt, network = _load_model(args.checkpoint)
    sequences, _ = read_symbolized(args.data, expect_digest=ckpt.partition_digest)
    samples = [s for seq in sequences for s in window_samples(seq, ckpt.labeling)]
    if not samples:
        raise DataError("no evaluable windows in the data")
    scores = score_samples(network, samples)
    targets = [s.target for s in samples]
    stored = ckpt.metadata.get("threshold")
    if ckpt.metadata.get("threshold_source") == "validation" and stored is not None:
        report = evaluation_report(scores, targets, threshold=stored, threshold_source="validation")
    else:
        report = evaluation_report(scores, targets, max_fpr=args.max_fpr)
    report = _sanitize_report(report)
    report["max_fpr"] = args.max_fpr
    report["config_digest"] = ckpt.metadata.get("config_digest")
    report["seed"] = ckpt.metadata.get("seed")
    out = _ensure_out(args.out)
    path = os.path.join(out, args.name)
    _write_json(path, report)
    print(
        f"wrote {path} (auc={report['auc']:.4f}, balanced_accuracy={report['balanced_accuracy']:.4f}, "
        f"threshold_source={report['threshold_source']})"
    )
    return 0


def cmd_predict(args):
    ckpt, network = _load_model(args.checkpoint)
    sequences, _ = read_symbolized(args.data, expect_digest=ckpt.partition_digest)
    lines = [
        canonical_json(
            {
                "kind": "symevent.scores",
                "config_digest": ckpt.metadata.get("config_digest"),
                "seed": ckpt.metadata.get("seed"),
            }
        )
    ]
    history = ckpt.labeling.history
    n = 0
    for seq in sequences:
        for t, inputs in window_inputs(seq, history):
            score = network.score(np.concatenate(inputs, axis=0))
            clip_index = seq.clip_ids[t] if seq.clip_ids is not None else t
            lines.append(
                canonical_json(
                    {"entity_id": seq.entity_id, "t": t, "clip_index": clip_index, "score": score}
                )
            )
            n += 1
    out = _ensure_out(args.out)
    path = os.path.join(out, args.name)
    atomic_write_text(path, "\n".join(lines) + "\n")
    print(f"wrote {path} ({n} scores)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="symevent",
        description="Symbolize heterogeneous time series and train small event classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="fit per-variable alphabets on training data")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("symbolize", help="map a CSV onto symbols using a partition file")
    p.add_argument("--config", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--data", required=True, help="CSV to symbolize")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="symbolized.jsonl")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_symbolize)

    p = sub.add_parser("train", help="train a classifier on a symbolized dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--data", required=True, help="symbolized JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a symbolized dataset and write metrics")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="symbolized JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="metrics.json")
    p.add_argument("--max-fpr", type=float, default=0.05)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="write per-window scores for a symbolized dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="symbolized JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="scores.jsonl")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
