"""MAE, classification accuracy, and average precision over prediction sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError


@dataclass
class PredictionSet:
    scores: np.ndarray
    labels: np.ndarray
    threshold: float = 0.5

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise ValueError("scores and labels must be flat arrays of equal length")
        if np.any((self.scores < 0.0) | (self.scores > 1.0)):
            raise ValueError("scores must lie in [0, 1]")
        if np.any((self.labels != 0) & (self.labels != 1)):
            raise ValueError("labels must be 0 (undamaged) or 1 (damaged)")

    def __len__(self):
        return len(self.scores)


def _require_nonempty(p):
    if len(p) == 0:
        raise ValueError("metric undefined on an empty prediction set")


def mae(p):
    """Mean absolute difference between scores and ground-truth labels."""
    _require_nonempty(p)
    return float(np.mean(np.abs(p.scores - p.labels)))


def classification_accuracy(p):
    """Fraction of correct thresholded predictions.

    Scores at or above the threshold classify as damaged (label 1).
    """
    _require_nonempty(p)
    predicted = (p.scores >= p.threshold).astype(np.int64)
    return float(np.mean(predicted == p.labels))


def average_precision(p):
    """Area under the precision-recall curve via recall-increment weights.

    Entries are ranked by score descending (ties keep input order); the
    prefix sweep over cutoffs n = 1..N accumulates
    sum_n [Recall(n) - Recall(n-1)] * Precision(n), with Recall(0) = 0.
    """
    _require_nonempty(p)
    positives = int(p.labels.sum())
    if positives == 0:
        raise UndefinedMetricError("average precision needs at least one positive label")
    order = np.argsort(-p.scores, kind="stable")
    hits = p.labels[order]
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, len(hits) + 1)
    recall = tp / positives
    increments = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(increments * precision))
