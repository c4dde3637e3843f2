"""ROC analysis for scored binary predictions.

All curve quantities are derived from integer true/false positive counts
over tie-grouped score thresholds, so the trapezoidal AUC agrees exactly
(not just approximately) with pair-counting under the half-tie
convention.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, SingleClassDataset
from .utils import as_1d_float, check_binary, check_same_length


def _grouped_counts(scores, labels):
    """Cumulative (fp, tp) integer counts at each distinct score, descending.

    Returns (fp, tp, thresholds, n_neg, n_pos) where index k gives the
    counts after classifying everything with score >= thresholds[k] as
    positive.  Equal scores form one group and flip together.
    """
    s = as_1d_float(scores, "scores")
    y = check_binary(labels, "labels")
    check_same_length(("scores", s), ("labels", y))
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassDataset("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    ss = s[order]
    yy = y[order]
    tp = np.cumsum(yy)
    fp = np.cumsum(1 - yy)
    last_of_group = np.concatenate([ss[1:] != ss[:-1], [True]])
    ends = np.nonzero(last_of_group)[0]
    return fp[ends], tp[ends], ss[ends], n_neg, n_pos


def roc_curve(scores, labels):
    """Tie-grouped ROC points as an array of (fpr, tpr, threshold) rows.

    Starts at (0, 0, +inf) and ends at (1, 1, min score); fpr and tpr are
    non-decreasing along the curve.
    """
    fp, tp, thr, n_neg, n_pos = _grouped_counts(scores, labels)
    out = np.empty((fp.size + 1, 3))
    out[0] = (0.0, 0.0, np.inf)
    out[1:, 0] = fp / n_neg
    out[1:, 1] = tp / n_pos
    out[1:, 2] = thr
    return out


def auc(scores, labels):
    """Area under the ROC curve by trapezoid over tie groups.

    Equals the probability that a random positive outscores a random
    negative, counting ties as one half.
    """
    fp, tp, _, n_neg, n_pos = _grouped_counts(scores, labels)
    fp_prev = np.concatenate([[0], fp[:-1]])
    tp_prev = np.concatenate([[0], tp[:-1]])
    area2 = int(np.sum((fp - fp_prev) * (tp + tp_prev)))
    return float(area2) / float(2 * n_pos * n_neg)


def balanced_accuracy_at_fpr(scores, labels, max_fpr=0.05):
    """Best mean of TPR and TNR over thresholds with FPR capped.

    Considers every tie-grouped ROC point (plus the all-negative sentinel
    at threshold +inf) whose false positive rate does not exceed
    ``max_fpr``; picks the highest TPR, breaking ties by lowest FPR and
    then highest threshold.  Returns (balanced_accuracy, threshold).
    """
    if not 0.0 <= max_fpr < 1.0:
        raise ConfigError(f"max_fpr must be in [0, 1), got {max_fpr}")
    fp, tp, thr, n_neg, n_pos = _grouped_counts(scores, labels)
    best = (0.0, 0.0, np.inf)  # (tpr, fpr, threshold): the sentinel point
    best_key = (0.0, 0.0, np.inf)
    for k in range(fp.size):
        fpr = fp[k] / n_neg
        if fpr > max_fpr:
            break  # fpr only grows from here
        tpr = tp[k] / n_pos
        key = (tpr, -fpr, thr[k])
        if key > best_key:
            best_key = key
            best = (tpr, fpr, thr[k])
    tpr, fpr, threshold = best
    return (tpr + 1.0 - fpr) / 2.0, float(threshold)


def rates_at_threshold(scores, labels, threshold):
    """(tpr, fpr) when classifying score >= threshold as positive."""
    s = as_1d_float(scores, "scores")
    y = check_binary(labels, "labels")
    check_same_length(("scores", s), ("labels", y))
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassDataset("rates need both classes present")
    pred = s >= threshold
    tpr = int(np.sum(pred & (y == 1))) / n_pos
    fpr = int(np.sum(pred & (y == 0))) / n_neg
    return tpr, fpr


def evaluation_report(scores, labels, max_fpr=0.05, threshold=None, threshold_source=None):
    """Full metrics dict for a scored set.

    With ``threshold`` given (e.g. selected on validation data), balanced
    accuracy is computed at that fixed operating point; otherwise the
    threshold is swept here and the report is marked in-sample.
    """
    if threshold is not None:
        tpr, fpr = rates_at_threshold(scores, labels, threshold)
        balacc = (tpr + 1.0 - fpr) / 2.0
        source = threshold_source or "fixed"
    else:
        balacc, threshold = balanced_accuracy_at_fpr(scores, labels, max_fpr=max_fpr)
        source = "in_sample"
    y = check_binary(labels, "labels")
    return {
        "auc": auc(scores, labels),
        "balanced_accuracy": balacc,
        "threshold": float(threshold),
        "threshold_source": source,
        "n_pos": int(y.sum()),
        "n_neg": int(y.size - y.sum()),
        "roc": [[float(a), float(b), float(c)] for a, b, c in roc_curve(scores, labels)],
    }
