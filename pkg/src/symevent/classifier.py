"""Estimator facade: fit an event scorer on symbolized clip sequences.

``EventSequenceClassifier`` wires labeling, vocabulary construction,
network assembly, and the training loop behind the familiar
fit/predict surface.  Inputs are lists of :class:`ClipSequence`; each
sequence expands into one window per time position with full history,
and predictions are per window.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import split_entities
from .embeddings import Vocabulary
from .exceptions import DataError, EmptyDataset
from .labeling import LabelingConfig, renormalize_samples, window_inputs, window_samples
from .metrics import evaluation_report
from .neuralcore.network import EventNetwork, NetworkConfig
from .neuralcore.training import TrainingConfig, score_samples, train
from .partitioning import VariableSpec


class EventSequenceClassifier(BaseEstimator, ClassifierMixin):
    """Window-level event classifier over symbolized clip sequences.

    Parameters mirror the pipeline stages: ``horizon``/``history`` set
    the labeling window, ``embedding``/``embed_dim`` pick the symbol
    representation, ``encoder``/``head``/``chop`` the architecture, and
    the remainder the optimizer and training loop.  ``variables`` may
    carry fitted VariableSpecs; without them alphabet sizes are inferred
    from the training symbols and all variables count as ordered.

    ``validation_fraction`` > 0 holds out whole entities for early
    stopping and threshold selection; no entity appears on both sides.
    """

    def __init__(
        self,
        variables=None,
        embedding="symbol_scalar",
        embed_dim=None,
        encoder=({"kind": "lstm", "units": 8},),
        head=(),
        chop=1,
        horizon=1,
        history=0,
        use_temporal_weights=True,
        include_truncated=False,
        vocab_min_count=2,
        vocab_min_rel_freq=None,
        init_scale=None,
        epochs=10,
        batch_size=1,
        patience=None,
        shuffle=True,
        learning_rate=0.001,
        beta1=0.9,
        beta2=0.999,
        epsilon=1e-8,
        dtype="float32",
        max_fpr=0.05,
        validation_fraction=0.0,
        seed=0,
    ):
        self.variables = variables
        self.embedding = embedding
        self.embed_dim = embed_dim
        self.encoder = encoder
        self.head = head
        self.chop = chop
        self.horizon = horizon
        self.history = history
        self.use_temporal_weights = use_temporal_weights
        self.include_truncated = include_truncated
        self.vocab_min_count = vocab_min_count
        self.vocab_min_rel_freq = vocab_min_rel_freq
        self.init_scale = init_scale
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.shuffle = shuffle
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.dtype = dtype
        self.max_fpr = max_fpr
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _labeling_config(self):
        return LabelingConfig(
            horizon=self.horizon,
            history=self.history,
            use_temporal_weights=self.use_temporal_weights,
            include_truncated=self.include_truncated,
        )

    def _resolve_variables(self, sequences):
        if self.variables is not None:
            specs = [v if isinstance(v, VariableSpec) else VariableSpec.from_dict(v) for v in self.variables]
            return [v.alphabet_size for v in specs], [v.ordered for v in specs]
        width = sequences[0].clips[0].shape[1] if sequences[0].clips else 0
        if width == 0:
            raise DataError("cannot infer variables from sequences without clips")
        highest = np.zeros(width, dtype=np.int64)
        for seq in sequences:
            for clip in seq.clips:
                if clip.shape[0]:
                    highest = np.maximum(highest, clip.max(axis=0))
        return (highest + 1).tolist(), [True] * width

    def fit(self, X, y=None):
        """Train on a list of ClipSequence; ``y`` is ignored (labels ride along)."""
        sequences = list(X)
        if not sequences:
            raise EmptyDataset("no training sequences")
        alphabet_sizes, ordered = self._resolve_variables(sequences)
        if self.validation_fraction > 0.0:
            train_ids, val_ids = split_entities(
                [s.entity_id for s in sequences], self.validation_fraction, self.seed
            )
            train_set = set(train_ids)
            train_seqs = [s for s in sequences if s.entity_id in train_set]
            val_seqs = [s for s in sequences if s.entity_id not in train_set]
        else:
            train_seqs, val_seqs = sequences, []
        cfg = self._labeling_config()
        train_samples = [s for seq in train_seqs for s in window_samples(seq, cfg)]
        if not train_samples:
            raise EmptyDataset("windowing produced no training samples")
        train_samples = renormalize_samples(train_samples)
        val_samples = [s for seq in val_seqs for s in window_samples(seq, cfg)]
        vocabulary = None
        if self.embedding == "word":
            vocabulary = Vocabulary.build(
                [clip for seq in train_seqs for clip in seq.clips],
                min_count=self.vocab_min_count,
                min_rel_freq=self.vocab_min_rel_freq,
            )
        network_config = NetworkConfig(
            embedding=self.embedding,
            encoder=tuple(self.encoder),
            head=tuple(self.head),
            embed_dim=self.embed_dim,
            chop=self.chop,
            seed=self.seed,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            dtype=self.dtype,
            init_scale=self.init_scale,
        )
        network = EventNetwork(
            network_config, alphabet_sizes=alphabet_sizes, ordered=ordered, vocabulary=vocabulary
        )
        result = train(
            network,
            train_samples,
            TrainingConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                patience=self.patience,
                shuffle=self.shuffle,
                seed=self.seed,
                max_fpr=self.max_fpr,
            ),
            val_samples=val_samples or None,
        )
        self.network_ = network
        self.vocabulary_ = vocabulary
        self.alphabet_sizes_ = list(alphabet_sizes)
        self.ordered_ = list(ordered)
        self.training_result_ = result
        self.history_ = result.history
        if result.val_threshold is not None:
            self.threshold_ = result.val_threshold
            self.threshold_source_ = "validation"
        else:
            self.threshold_ = 0.5
            self.threshold_source_ = "default"
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise DataError("classifier is not fitted")

    def iter_windows(self, X):
        """(entity_id, position, stacked symbols) per full-history window."""
        self._check_fitted()
        for seq in X:
            for t, inputs in window_inputs(seq, self.history):
                yield seq.entity_id, t, np.concatenate(inputs, axis=0)

    def decision_function(self, X):
        """Window scores in iteration order, one float per window."""
        self._check_fitted()
        return np.array([self.network_.score(sym) for _, _, sym in self.iter_windows(X)], dtype=np.float64)

    def predict_proba(self, X):
        scores = self.decision_function(X)
        return np.column_stack([1.0 - scores, scores])

    def predict(self, X):
        """Window labels at the fitted operating threshold."""
        return (self.decision_function(X) >= self.threshold_).astype(np.int64)

    def labeled_windows(self, X):
        """Evaluation samples: windowed, truncated positions dropped."""
        cfg = self._labeling_config()
        return [s for seq in X for s in window_samples(seq, cfg)]

    def evaluate(self, X, max_fpr=None):
        """Metrics dict on labeled windows of held-out sequences.

        The operating threshold comes from validation when one was
        selected during fit; otherwise it is swept on this data and the
        result is flagged as in-sample.
        """
        self._check_fitted()
        max_fpr = self.max_fpr if max_fpr is None else max_fpr
        samples = self.labeled_windows(X)
        if not samples:
            raise EmptyDataset("no evaluable windows")
        scores = score_samples(self.network_, samples)
        targets = np.array([s.target for s in samples], dtype=np.int64)
        if self.threshold_source_ == "validation":
            return evaluation_report(
                scores, targets, max_fpr=max_fpr, threshold=self.threshold_, threshold_source="validation"
            )
        return evaluation_report(scores, targets, max_fpr=max_fpr)
