"""Weighted binary samples from event-annotated clip sequences.

A clip sequence is a time-ordered list of symbolized observation clips
for one entity plus a per-clip event flag.  This module derives the
prediction target over a ``horizon`` of future clips, attaches temporal
weights that emphasize samples close to an upcoming event, rebalances
class weight mass, and assembles sliding windows of ``history + 1``
consecutive clips as model inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, ShapeMismatch, SingleClassDataset
from .utils import check_binary


@dataclass(frozen=True)
class LabelingConfig:
    """Target and windowing settings.

    horizon : scan the next ``horizon`` clips for an event (K >= 1).
    history : feed the current clip plus ``history`` past clips (M >= 0).
    use_temporal_weights : when false, every pre-renormalization weight is 1.
    include_truncated : include end-of-sequence samples whose horizon window
        is incomplete and event-free, treating them as negatives.
    """

    horizon: int
    history: int
    use_temporal_weights: bool = True
    include_truncated: bool = False

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ConfigError(f"horizon must be an int >= 1, got {self.horizon!r}")
        if not isinstance(self.history, int) or self.history < 0:
            raise ConfigError(f"history must be an int >= 0, got {self.history!r}")


@dataclass(frozen=True)
class ClipSequence:
    """Time-ordered symbolized clips and per-clip event flags for one entity.

    ``clip_ids`` optionally keeps the original clip indices from the source
    data; positions (0-based) are the working time axis everywhere else.
    """

    entity_id: str
    clips: tuple
    event_labels: np.ndarray
    clip_ids: tuple = None

    def __post_init__(self):
        clips = tuple(np.asarray(c, dtype=np.int64) for c in self.clips)
        for c in clips:
            if c.ndim != 2:
                raise ShapeMismatch(f"clip must be (steps, variables), got shape {c.shape}")
        widths = {c.shape[1] for c in clips}
        if len(widths) > 1:
            raise ShapeMismatch(f"clips disagree on variable count: {sorted(widths)}")
        labels = check_binary(self.event_labels, "event_labels")
        if labels.size != len(clips):
            raise ShapeMismatch(f"{labels.size} event labels for {len(clips)} clips")
        if self.clip_ids is not None:
            ids = tuple(int(i) for i in self.clip_ids)
            if len(ids) != len(clips):
                raise ShapeMismatch(f"{len(ids)} clip_ids for {len(clips)} clips")
            object.__setattr__(self, "clip_ids", ids)
        object.__setattr__(self, "clips", clips)
        object.__setattr__(self, "event_labels", labels)

    def __len__(self):
        return len(self.clips)


@dataclass(frozen=True)
class LabeledSample:
    """One windowed training sample: inputs end at clip index t (0-based)."""

    inputs: tuple
    target: int
    weight: float
    entity_id: str
    t: int

    @property
    def symbols(self):
        """All window steps concatenated into one (steps, variables) array."""
        return np.concatenate(self.inputs, axis=0)


def derive_targets(event_labels, horizon):
    """Targets over the horizon plus a truncation flag per position.

    ``targets[t]`` is 1 iff any event occurs in clips t+1..t+horizon.
    ``truncated[t]`` marks positions whose horizon window extends past the
    end of the sequence while showing no event: their true label is
    unknowable and they are excluded from training by default.
    """
    labels = check_binary(event_labels, "event_labels")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    n = labels.size
    ext = np.concatenate([labels, np.zeros(horizon, dtype=np.int64)])
    csum = np.concatenate([[0], np.cumsum(ext)])
    idx = np.arange(n)
    future = csum[idx + horizon + 1] - csum[idx + 1]
    targets = (future > 0).astype(np.int64)
    truncated = (idx + horizon > n - 1) & (targets == 0)
    return targets, truncated


def temporal_weights(event_labels, targets, horizon):
    """Per-position weights emphasizing imminent and repeated events.

    For a positive target the weight is the sum over future events within
    the horizon of (horizon - offset + 1); events just one step ahead count
    ``horizon``, events at the horizon edge count 1.  Negative targets
    weigh 1.  Out-of-range future steps contribute nothing.
    """
    labels = check_binary(event_labels, "event_labels").astype(np.float64)
    y = check_binary(targets, "targets")
    if labels.size != y.size:
        raise ShapeMismatch(f"{labels.size} labels vs {y.size} targets")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    n = labels.size
    ext = np.concatenate([labels, np.zeros(horizon)])
    acc = np.zeros(n)
    for j in range(1, horizon + 1):
        acc += (horizon - j + 1) * ext[j : j + n]
    return np.where(y == 1, acc, 1.0)


def renormalize_weights(weights, targets):
    """Scale positive-class weights so both classes carry equal total mass.

    Negative weights are untouched; the relative ordering among positives
    is preserved.  Raises :class:`SingleClassDataset` when either class is
    absent.
    """
    w = np.asarray(weights, dtype=np.float64).copy()
    y = check_binary(targets, "targets")
    if w.size != y.size:
        raise ShapeMismatch(f"{w.size} weights vs {y.size} targets")
    pos = y == 1
    if not pos.any() or pos.all():
        raise SingleClassDataset("renormalization needs both classes present")
    w[pos] *= w[~pos].sum() / w[pos].sum()
    return w


def renormalize_samples(samples):
    """Apply :func:`renormalize_weights` across a list of LabeledSamples."""
    weights = np.array([s.weight for s in samples], dtype=np.float64)
    targets = np.array([s.target for s in samples], dtype=np.int64)
    scaled = renormalize_weights(weights, targets)
    return [replace(s, weight=float(w)) for s, w in zip(samples, scaled)]


def window_samples(seq, cfg):
    """Sliding windows of history+1 clips with targets and raw weights.

    Only positions with a full history window are emitted.  Truncated
    positions are dropped unless ``cfg.include_truncated`` is set, in which
    case they enter as negatives.  Weights are pre-renormalization; call
    :func:`renormalize_samples` once over the full training set.
    """
    targets, truncated = derive_targets(seq.event_labels, cfg.horizon)
    if cfg.use_temporal_weights:
        weights = temporal_weights(seq.event_labels, targets, cfg.horizon)
    else:
        weights = np.ones(len(seq))
    out = []
    for t in range(cfg.history, len(seq)):
        if truncated[t] and not cfg.include_truncated:
            continue
        out.append(
            LabeledSample(
                inputs=seq.clips[t - cfg.history : t + 1],
                target=int(targets[t]),
                weight=float(weights[t]),
                entity_id=seq.entity_id,
                t=t,
            )
        )
    return out


def window_inputs(seq, history):
    """All full-history windows of a sequence, without labels, for scoring."""
    if history < 0:
        raise ConfigError(f"history must be >= 0, got {history}")
    return [(t, seq.clips[t - history : t + 1]) for t in range(history, len(seq))]
