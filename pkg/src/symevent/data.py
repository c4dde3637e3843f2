"""CSV ingestion, preparation, and the symbolized dataset file format.

Raw data arrives as a long-format CSV with columns ``entity_id``,
``clip_index``, ``step_index``, the variable columns, and a per-clip
``event_label`` replicated on every row of the clip.  Preparation sorts,
imputes gaps per entity timeline, adds derived absolute-difference
columns, and optionally downsamples steps within clips.  Symbolized
sequences travel as JSON-lines: one header record carrying the partition
digest, then one record per clip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .exceptions import ConfigError, DataError, DigestMismatch, EmptyDataset
from .labeling import ClipSequence
from .partitioning import SymbolicPartitioner, forward_fill, interpolate_missing
from .utils import atomic_write_text, canonical_json

REQUIRED_COLUMNS = ("entity_id", "clip_index", "step_index", "event_label")
SYMBOLIZED_KIND = "symevent.symbolized"
DOWNSAMPLE_MODES = ("stride", "mean")


@dataclass(frozen=True)
class ColumnSpec:
    """Declared role of one CSV column (or derived column) in the schema."""

    name: str
    kind: str = "continuous"
    alphabet_size: int = None
    method: str = None
    categories: tuple = None
    derived: str = None
    source: str = None

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise ConfigError(f"{self.name}: kind must be continuous or categorical")
        if self.derived is not None:
            if self.derived != "abs_diff":
                raise ConfigError(f"{self.name}: unknown derived directive {self.derived!r}")
            if not self.source:
                raise ConfigError(f"{self.name}: derived column needs a source")
            if self.kind != "continuous":
                raise ConfigError(f"{self.name}: derived columns are continuous")
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))

    @classmethod
    def from_dict(cls, d):
        allowed = {"name", "kind", "alphabet_size", "method", "categories", "derived", "source"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"schema entry {d.get('name')!r}: unknown keys {sorted(unknown)}")
        return cls(
            name=d["name"],
            kind=d.get("kind", "continuous"),
            alphabet_size=d.get("alphabet_size"),
            method=d.get("method"),
            categories=tuple(d["categories"]) if d.get("categories") is not None else None,
            derived=d.get("derived"),
            source=d.get("source"),
        )


def parse_schema(schema):
    """Schema config dict -> list of ColumnSpec, order preserved."""
    entries = schema.get("variables")
    if not entries:
        raise ConfigError("schema.variables is empty")
    cols = [ColumnSpec.from_dict(e) for e in entries]
    names = [c.name for c in cols]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate schema names in {names}")
    return cols


def load_frame(path):
    """Read the long-format CSV and check required columns."""
    df = pd.read_csv(path, dtype={"entity_id": str})
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"{path}: missing required columns {missing}")
    if len(df) == 0:
        raise EmptyDataset(f"{path}: no rows")
    return df


def prepare_frame(df, columns, downsample_factor=1, downsample_mode="stride"):
    """Sort, impute, derive, and downsample; returns a fresh frame.

    Imputation runs per entity over its full flattened timeline so a gap
    at a clip boundary borrows from the neighbouring clip.  Derived
    abs_diff columns hold |x_t - x_{t-1}| with 0.0 at each entity's first
    step.  Downsampling keeps every k-th step (stride) or block-averages
    continuous columns (mean); categorical columns always take the first
    step of each block.
    """
    base = [c for c in columns if c.derived is None]
    missing = [c.name for c in base if c.name not in df.columns]
    if missing:
        raise DataError(f"CSV lacks schema columns {missing}")
    for c in columns:
        if c.derived is not None and c.source not in df.columns:
            raise DataError(f"derived column {c.name}: source {c.source!r} not in CSV")
    df = df.sort_values(["entity_id", "clip_index", "step_index"], kind="mergesort").reset_index(drop=True)

    by_entity = df.groupby("entity_id", sort=True).indices
    for c in base:
        if c.kind == "continuous":
            values = pd.to_numeric(df[c.name], errors="coerce").to_numpy(dtype=np.float64)
            for rows in by_entity.values():
                values[rows] = interpolate_missing(values[rows])
            df[c.name] = values
        else:
            values = [None if pd.isna(v) else str(v) for v in df[c.name]]
            for rows in by_entity.values():
                filled = forward_fill([values[i] for i in rows])
                for i, v in zip(rows, filled):
                    values[i] = v
            df[c.name] = values

    for c in columns:
        if c.derived == "abs_diff":
            src = df[c.source].to_numpy(dtype=np.float64)
            out = np.zeros(len(df))
            for rows in by_entity.values():
                out[rows[1:]] = np.abs(np.diff(src[rows]))
            df[c.name] = out

    if downsample_factor > 1:
        df = _downsample(df, columns, downsample_factor, downsample_mode)
    return df


def _downsample(df, columns, factor, mode):
    if mode not in DOWNSAMPLE_MODES:
        raise ConfigError(f"downsample mode must be one of {DOWNSAMPLE_MODES}, got {mode!r}")
    pieces = []
    for (entity, clip), g in df.groupby(["entity_id", "clip_index"], sort=True):
        head = g.iloc[::factor].copy()
        if mode == "mean":
            for c in columns:
                if c.kind == "continuous":
                    vals = g[c.name].to_numpy(dtype=np.float64)
                    n_blocks = len(head)
                    sums = np.add.reduceat(vals, factor * np.arange(n_blocks))
                    sizes = np.diff(np.append(factor * np.arange(n_blocks), vals.size))
                    head[c.name] = sums / sizes
        head["step_index"] = np.arange(len(head))
        pieces.append(head)
    return pd.concat(pieces, ignore_index=True)


def make_partitioner(columns, default_alphabet=4, default_method="quantile", unknown_slot=False):
    """Partitioner whose per-column schema mirrors the ColumnSpecs."""
    schema = {}
    for c in columns:
        entry = {"kind": c.kind}
        if c.alphabet_size is not None:
            entry["alphabet_size"] = c.alphabet_size
        if c.method is not None:
            entry["method"] = c.method
        if c.categories is not None:
            entry["categories"] = list(c.categories)
        schema[c.name] = entry
    return SymbolicPartitioner(
        alphabet_size=default_alphabet, method=default_method, schema=schema, unknown_slot=unknown_slot
    )


def assemble_sequences(df, symbols):
    """Prepared frame + symbol matrix -> list of ClipSequence, entities sorted.

    ``symbols`` rows must align with frame rows.  Each clip's event label
    must be constant across its rows.
    """
    if len(df) != symbols.shape[0]:
        raise DataError(f"{symbols.shape[0]} symbol rows for {len(df)} frame rows")
    sequences = []
    for entity, edf in df.groupby("entity_id", sort=True):
        clips = []
        labels = []
        clip_ids = []
        for clip_idx, g in edf.groupby("clip_index", sort=True):
            events = g["event_label"].unique()
            if len(events) != 1:
                raise DataError(f"entity {entity} clip {clip_idx}: mixed event labels {events.tolist()}")
            clips.append(symbols[g.index.to_numpy()])
            labels.append(int(events[0]))
            clip_ids.append(int(clip_idx))
        sequences.append(
            ClipSequence(entity_id=str(entity), clips=tuple(clips), event_labels=np.array(labels), clip_ids=tuple(clip_ids))
        )
    return sequences


def split_entities(entity_ids, fraction, seed):
    """Deterministic entity-level split; returns (main_ids, held_ids).

    The held side receives round(fraction * n) entities, clamped so both
    sides stay non-empty whenever 0 < fraction < 1.
    """
    ids = sorted(set(map(str, entity_ids)))
    if fraction <= 0.0:
        return ids, []
    if fraction >= 1.0:
        return [], ids
    n = len(ids)
    k = int(round(fraction * n))
    k = max(1, min(k, n - 1)) if n > 1 else 0
    perm = np.random.default_rng(seed).permutation(n)
    held = {ids[i] for i in perm[:k]}
    return [i for i in ids if i not in held], sorted(held)


def write_symbolized(path, sequences, header):
    """Write the JSONL dataset: one header line, then one line per clip."""
    head = dict(header)
    head["kind"] = SYMBOLIZED_KIND
    head["version"] = 1
    lines = [canonical_json(head)]
    for seq in sequences:
        ids = seq.clip_ids if seq.clip_ids is not None else range(len(seq))
        for clip, label, cid in zip(seq.clips, seq.event_labels, ids):
            lines.append(
                canonical_json(
                    {
                        "entity_id": seq.entity_id,
                        "clip_index": int(cid),
                        "event_label": int(label),
                        "symbols": clip.tolist(),
                    }
                )
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_symbolized(path, expect_digest=None):
    """Read the JSONL dataset back into sequences plus its header.

    Clips group by entity in file order; entities must be contiguous.
    ``expect_digest`` cross-checks the partition digest recorded at
    symbolization time.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise EmptyDataset(f"{path}: empty file")
    header = json.loads(lines[0])
    if header.get("kind") != SYMBOLIZED_KIND:
        raise DataError(f"{path}: not a symbolized dataset")
    if expect_digest is not None and header.get("partition_digest") != expect_digest:
        raise DigestMismatch(
            f"{path}: partition digest {header.get('partition_digest')} != expected {expect_digest}"
        )
    order = []
    groups = {}
    for line in lines[1:]:
        rec = json.loads(line)
        entity = rec["entity_id"]
        if entity not in groups:
            order.append(entity)
            groups[entity] = []
        groups[entity].append(rec)
    if not order:
        raise EmptyDataset(f"{path}: header only, no clips")
    sequences = []
    for entity in order:
        recs = sorted(groups[entity], key=lambda r: r["clip_index"])
        sequences.append(
            ClipSequence(
                entity_id=entity,
                clips=tuple(np.asarray(r["symbols"], dtype=np.int64) for r in recs),
                event_labels=np.array([r["event_label"] for r in recs]),
                clip_ids=tuple(r["clip_index"] for r in recs),
            )
        )
    return sequences, header
