"""Weighted binary cross-entropy, normalized by total weight."""

from __future__ import annotations

import numpy as np

from ..exceptions import ShapeMismatch

CLAMP_EPS = 1e-7


def _prepare(targets, predictions, weights, eps):
    y = np.asarray(targets, dtype=np.float64).ravel()
    p = np.asarray(predictions, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    if not (y.size == p.size == w.size):
        raise ShapeMismatch(f"lengths differ: targets {y.size}, predictions {p.size}, weights {w.size}")
    clamped = np.clip(p, eps, 1.0 - eps)
    return y, p, w, clamped


def weighted_bce(targets, predictions, weights, eps=CLAMP_EPS):
    """Mean negative log-likelihood under per-sample weights.

    loss = -sum(w * (y*log(p) + (1-y)*log(1-p))) / sum(w), with predictions
    clamped to [eps, 1-eps].  Uniformly scaling the weights leaves the
    value unchanged.
    """
    y, _, w, p = _prepare(targets, predictions, weights, eps)
    ll = y * np.log(p) + (1.0 - y) * np.log1p(-p)
    return float(-(w * ll).sum() / w.sum())


def weighted_bce_backward(targets, predictions, weights, eps=CLAMP_EPS):
    """Gradient of :func:`weighted_bce` w.r.t. the raw predictions.

    Zero where the clamp is active (the loss is flat there).
    """
    y, raw, w, p = _prepare(targets, predictions, weights, eps)
    grad = -w * (y / p - (1.0 - y) / (1.0 - p)) / w.sum()
    grad[(raw < eps) | (raw > 1.0 - eps)] = 0.0
    return grad
