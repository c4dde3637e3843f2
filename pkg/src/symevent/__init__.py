"""Event prediction on heterogeneous time series via symbolization.

Continuous and categorical channels are partitioned into small
per-variable alphabets, clips become integer symbol matrices, and a
compact neural classifier is trained end-to-end on one of three
trainable symbol representations.
"""

from .classifier import EventSequenceClassifier
from .embeddings import (
    SymbolScalarEmbedding,
    SymbolSumEmbedding,
    Vocabulary,
    WordEmbedding,
    embedding_param_count,
)
from .labeling import (
    ClipSequence,
    LabeledSample,
    LabelingConfig,
    derive_targets,
    renormalize_weights,
    temporal_weights,
    window_samples,
)
from .metrics import auc, balanced_accuracy_at_fpr, roc_curve
from .neuralcore import EventNetwork, NetworkConfig, TrainingConfig
from .partitioning import (
    SymbolicPartitioner,
    VariableSpec,
    jenks_splits,
    quantile_splits,
    uniform_splits,
)
from .checkpoint import Checkpoint

__version__ = "0.1.0"

__all__ = [
    "EventSequenceClassifier",
    "SymbolicPartitioner",
    "VariableSpec",
    "uniform_splits",
    "quantile_splits",
    "jenks_splits",
    "ClipSequence",
    "LabeledSample",
    "LabelingConfig",
    "derive_targets",
    "temporal_weights",
    "renormalize_weights",
    "window_samples",
    "Vocabulary",
    "WordEmbedding",
    "SymbolSumEmbedding",
    "SymbolScalarEmbedding",
    "embedding_param_count",
    "EventNetwork",
    "NetworkConfig",
    "TrainingConfig",
    "auc",
    "balanced_accuracy_at_fpr",
    "roc_curve",
    "Checkpoint",
    "__version__",
]
