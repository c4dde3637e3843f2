"""Targets, temporal weights, renormalization, and windowing."""

import numpy as np
import pytest

from symevent.exceptions import ConfigError, ShapeMismatch, SingleClassDataset
from symevent.labeling import (
    ClipSequence,
    LabelingConfig,
    derive_targets,
    renormalize_samples,
    renormalize_weights,
    temporal_weights,
    window_inputs,
    window_samples,
)


def brute_targets(labels, horizon):
    n = len(labels)
    return [int(any(labels[t + 1 : t + 1 + horizon])) for t in range(n)]


def brute_weights(labels, targets, horizon):
    n = len(labels)
    out = []
    for t in range(n):
        if targets[t] == 0:
            out.append(1.0)
            continue
        w = 0.0
        for j in range(1, horizon + 1):
            if t + j < n and labels[t + j]:
                w += horizon - j + 1
        out.append(w)
    return out


class TestDeriveTargets:
    def test_documented_example(self):
        targets, truncated = derive_targets([0, 0, 0, 1], 2)
        assert targets.tolist() == [0, 1, 1, 0]
        assert truncated.tolist() == [False, False, False, True]

    def test_all_zeros(self):
        targets, _ = derive_targets([0] * 7, 3)
        assert targets.tolist() == [0] * 7

    def test_events_at_two_offsets(self):
        targets, _ = derive_targets([0, 1, 0, 1, 0, 0], 5)
        assert targets[0] == 1

    def test_shift_equivariance(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 2, size=30).tolist()
        base, _ = derive_targets(labels, 4)
        shifted, _ = derive_targets([0] + labels, 4)
        assert shifted[1:].tolist() == base.tolist()

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 25))
            horizon = int(rng.integers(1, 7))
            labels = rng.integers(0, 2, size=n).tolist()
            targets, truncated = derive_targets(labels, horizon)
            assert targets.tolist() == brute_targets(labels, horizon)
            for t in range(n):
                assert truncated[t] == (t + horizon > n - 1 and targets[t] == 0)

    def test_rejects_bad_horizon(self):
        with pytest.raises(ConfigError):
            derive_targets([0, 1], 0)


class TestTemporalWeights:
    def test_two_events_in_horizon(self):
        labels = [0, 1, 0, 1, 0, 0]
        targets, _ = derive_targets(labels, 5)
        weights = temporal_weights(labels, targets, 5)
        assert weights[0] == (5 - 1 + 1) + (5 - 3 + 1) == 8

    def test_event_at_horizon_edge(self):
        for horizon in (1, 3, 6):
            labels = [0] * horizon + [1]
            targets, _ = derive_targets(labels, horizon)
            assert temporal_weights(labels, targets, horizon)[0] == 1.0

    def test_negative_weight_is_one(self):
        labels = [0, 0, 0, 0, 1]
        targets, _ = derive_targets(labels, 2)
        weights = temporal_weights(labels, targets, 2)
        assert weights[0] == 1.0 and targets[0] == 0

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            n = int(rng.integers(1, 30))
            horizon = int(rng.integers(1, 8))
            labels = rng.integers(0, 2, size=n).tolist()
            targets, _ = derive_targets(labels, horizon)
            weights = temporal_weights(labels, targets, horizon)
            assert weights.tolist() == brute_weights(labels, targets.tolist(), horizon)

    def test_weights_integral_and_bounded(self):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 2, size=200).tolist()
        horizon = 5
        targets, _ = derive_targets(labels, horizon)
        weights = temporal_weights(labels, targets, horizon)
        assert np.all(weights == np.round(weights))
        assert np.all(weights >= 0)
        assert np.all(weights[targets == 0] == 1.0)
        assert np.all(weights <= horizon * (horizon + 1) / 2)


class TestRenormalize:
    def test_documented_example(self):
        weights = [2.0, 6.0, 1.0, 1.0, 1.0, 1.0]
        targets = [1, 1, 0, 0, 0, 0]
        out = renormalize_weights(weights, targets)
        np.testing.assert_allclose(out, [1.0, 3.0, 1.0, 1.0, 1.0, 1.0])

    def test_balanced_stays(self):
        out = renormalize_weights([2.0, 1.0, 1.0], [1, 0, 0])
        np.testing.assert_allclose(out, [2.0, 1.0, 1.0])

    def test_sums_match_exactly_enough(self):
        rng = np.random.default_rng(4)
        weights = rng.uniform(0.5, 9.0, size=500)
        targets = (rng.random(500) < 0.1).astype(int)
        out = renormalize_weights(weights, targets)
        pos = out[targets == 1].sum()
        neg = out[targets == 0].sum()
        assert abs(pos - neg) <= 1e-9 * out.sum()
        # negatives untouched, positive order preserved
        np.testing.assert_array_equal(out[targets == 0], weights[targets == 0])
        ratios = out[targets == 1] / weights[targets == 1]
        np.testing.assert_allclose(ratios, ratios[0])

    def test_single_class_raises(self):
        with pytest.raises(SingleClassDataset):
            renormalize_weights([1.0, 1.0], [0, 0])
        with pytest.raises(SingleClassDataset):
            renormalize_weights([1.0, 1.0], [1, 1])


def sequence(labels, steps=2, width=3, entity="e0"):
    rng = np.random.default_rng(len(labels))
    clips = tuple(rng.integers(0, 4, size=(steps, width)) for _ in labels)
    return ClipSequence(entity_id=entity, clips=clips, event_labels=np.array(labels))


class TestWindowSamples:
    def test_history_requirement(self):
        seq = sequence([0, 0, 0, 0, 1])
        cfg = LabelingConfig(horizon=1, history=3)
        samples = window_samples(seq, cfg)
        assert [s.t for s in samples] == [3]  # t=4 is truncated (no future)
        assert samples[0].target == 1
        assert len(samples[0].inputs) == 4

    def test_no_history(self):
        seq = sequence([0, 0, 1, 0])
        cfg = LabelingConfig(horizon=1, history=0)
        samples = window_samples(seq, cfg)
        assert [s.t for s in samples] == [0, 1, 2]

    def test_truncated_included_as_negative(self):
        seq = sequence([0, 0, 1, 0])
        cfg = LabelingConfig(horizon=2, history=0, include_truncated=True)
        samples = window_samples(seq, cfg)
        assert [s.t for s in samples] == [0, 1, 2, 3]
        assert samples[3].target == 0

    def test_no_future_leakage(self):
        seq = sequence([0, 0, 0, 1, 0, 0])
        cfg = LabelingConfig(horizon=2, history=2)
        for s in window_samples(seq, cfg):
            assert len(s.inputs) == 3
            for k, clip in enumerate(s.inputs):
                np.testing.assert_array_equal(clip, seq.clips[s.t - 2 + k])

    def test_flat_weights_mode(self):
        seq = sequence([0, 1, 1, 0, 1, 0, 0])
        cfg = LabelingConfig(horizon=3, history=0, use_temporal_weights=False)
        samples = window_samples(seq, cfg)
        assert all(s.weight == 1.0 for s in samples)

    def test_symbols_concatenation(self):
        seq = sequence([0, 0, 1], steps=2)
        cfg = LabelingConfig(horizon=1, history=1)
        samples = window_samples(seq, cfg)
        assert samples[0].symbols.shape == (4, 3)

    def test_renormalize_samples(self):
        seq = sequence([0, 0, 1, 0, 0, 1, 0, 0])
        cfg = LabelingConfig(horizon=2, history=0)
        samples = renormalize_samples(window_samples(seq, cfg))
        pos = sum(s.weight for s in samples if s.target == 1)
        neg = sum(s.weight for s in samples if s.target == 0)
        assert abs(pos - neg) <= 1e-12 * (pos + neg)

    def test_window_inputs_covers_all_positions(self):
        seq = sequence([0, 0, 0, 0, 1])
        pairs = window_inputs(seq, 2)
        assert [t for t, _ in pairs] == [2, 3, 4]


class TestClipSequence:
    def test_length_mismatch(self):
        rng = np.random.default_rng(0)
        clips = (rng.integers(0, 3, size=(2, 2)),)
        with pytest.raises(ShapeMismatch):
            ClipSequence(entity_id="e", clips=clips, event_labels=np.array([0, 1]))

    def test_width_mismatch(self):
        rng = np.random.default_rng(0)
        clips = (rng.integers(0, 3, size=(2, 2)), rng.integers(0, 3, size=(2, 3)))
        with pytest.raises(ShapeMismatch):
            ClipSequence(entity_id="e", clips=clips, event_labels=np.array([0, 0]))

    def test_variable_clip_lengths_allowed(self):
        rng = np.random.default_rng(0)
        clips = (rng.integers(0, 3, size=(2, 2)), rng.integers(0, 3, size=(5, 2)))
        seq = ClipSequence(entity_id="e", clips=clips, event_labels=np.array([0, 1]))
        assert len(seq) == 2
