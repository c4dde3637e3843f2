"""Minimal trainable network stack on plain numpy arrays.

Layers (LSTM, ReLU RNN, 1-D convolution, max pooling, dense), a weighted
cross-entropy loss, an ADAM optimizer, a small sequence-classification
network with optional sequence chopping, and a training loop.
"""

from .layers import LSTM, IRNN, Conv1D, MaxPool1D, GlobalMaxPool, Dense, sigmoid
from .loss import weighted_bce, weighted_bce_backward
from .optim import Adam
from .network import NetworkConfig, EventNetwork
from .training import TrainingConfig, TrainingResult, score_samples, train

__all__ = [
    "LSTM", "IRNN", "Conv1D", "MaxPool1D", "GlobalMaxPool", "Dense", "sigmoid",
    "weighted_bce", "weighted_bce_backward", "Adam",
    "NetworkConfig", "EventNetwork",
    "TrainingConfig", "TrainingResult", "score_samples", "train",
]
