"""Training loop: shuffled per-sample updates, validation, early stopping.

The epoch objective is the weight-normalized cross-entropy over the
training set.  Each sample's gradient is scaled by its weight over the
mean training weight, so summing per-sample updates over an epoch
matches the normalized full-batch objective while staying invariant to
uniform weight rescaling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..exceptions import EmptyDataset, NonFiniteLoss
from ..metrics import auc, balanced_accuracy_at_fpr
from .loss import weighted_bce, weighted_bce_backward
from .optim import Adam


@dataclass(frozen=True)
class TrainingConfig:
    """Loop settings; the optimizer itself is configured on the network."""

    epochs: int = 10
    batch_size: int = 1
    patience: int = None
    shuffle: bool = True
    seed: int = 0
    max_fpr: float = 0.05


@dataclass
class TrainingResult:
    history: list
    epochs_run: int
    best_epoch: int
    val_threshold: float
    threshold_source: str


def score_samples(network, samples):
    """Forward-only scores for a list of windowed samples."""
    return np.array([network.score(s.symbols) for s in samples], dtype=np.float64)


def _snapshot(network):
    return {name: p.copy() for name, p, _ in network.param_items()}


def _restore(network, snapshot):
    for name, p, _ in network.param_items():
        p[...] = snapshot[name]


def train(network, samples, config, val_samples=None, log_fn=None):
    """Fit the network on renormalized samples; returns a TrainingResult.

    With a validation set, tracks AUC per epoch, stops after ``patience``
    epochs without strict improvement, and restores the best parameters.
    ``log_fn`` receives each epoch record as a dict.
    """
    samples = list(samples)
    if not samples:
        raise EmptyDataset("no training samples")
    mean_weight = float(np.mean([s.weight for s in samples]))
    rng = np.random.default_rng(config.seed)
    adam = Adam(
        network.param_items(),
        lr=network.config.learning_rate,
        beta1=network.config.beta1,
        beta2=network.config.beta2,
        eps=network.config.epsilon,
    )
    history = []
    best_auc = -np.inf
    best_epoch = None
    best_threshold = None
    best_params = None
    bad_epochs = 0
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(samples)) if config.shuffle else np.arange(len(samples))
        loss_sum = 0.0
        weight_sum = 0.0
        for lo in range(0, order.size, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            network.zero_grads()
            for idx in batch:
                sample = samples[idx]
                prob, cache = network.forward(sample.symbols)
                loss = weighted_bce([sample.target], [prob], [1.0])
                if not np.isfinite(loss):
                    raise NonFiniteLoss(
                        f"non-finite loss at epoch {epoch}, sample ({sample.entity_id}, t={sample.t})"
                    )
                loss_sum += sample.weight * loss
                weight_sum += sample.weight
                dprob = (sample.weight / mean_weight) * weighted_bce_backward(
                    [sample.target], [prob], [1.0]
                )[0]
                network.backward(dprob, cache)
            if batch.size > 1:
                for _, _, g in network.param_items():
                    g *= 1.0 / batch.size
            adam.step()
            network.project_embeddings()
        epochs_run = epoch
        record = {
            "epoch": epoch,
            "train_loss": loss_sum / weight_sum,
            "val_auc": None,
            "val_balacc": None,
            "wall_ms": 1000.0 * (time.perf_counter() - started),
        }
        if val_samples:
            val_scores = score_samples(network, val_samples)
            val_targets = [s.target for s in val_samples]
            record["val_auc"] = auc(val_scores, val_targets)
            record["val_balacc"], threshold = balanced_accuracy_at_fpr(
                val_scores, val_targets, max_fpr=config.max_fpr
            )
            if record["val_auc"] > best_auc:
                best_auc = record["val_auc"]
                best_epoch = epoch
                best_threshold = threshold
                best_params = _snapshot(network)
                bad_epochs = 0
            else:
                bad_epochs += 1
        history.append(record)
        if log_fn is not None:
            log_fn(record)
        if val_samples and config.patience is not None and bad_epochs >= config.patience:
            break
    if best_params is not None:
        _restore(network, best_params)
    return TrainingResult(
        history=history,
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        val_threshold=best_threshold,
        threshold_source="validation" if val_samples else "unset",
    )
