"""Evaluation metrics, matching the toolkit's definitions exactly:
per-class F1 is 0 when precision + recall is 0, macro F1 averages all five
classes, and MAE is the mean absolute distance on the 1..5 scale."""

from __future__ import annotations

import numpy as np

from . import NUM_CLASSES


def classification_metrics(gold: list[int], pred: list[int]) -> dict:
    g = np.asarray(gold, dtype=int)
    p = np.asarray(pred, dtype=int)
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES))
    np.add.at(counts, (g - 1, p - 1), 1)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
    recall = np.where(actual > 0, tp / np.maximum(actual, 1), 0.0)
    pr = precision + recall
    f1 = np.where(pr > 0, 2 * precision * recall / np.maximum(pr, 1e-300), 0.0)
    return {
        "accuracy": float((g == p).mean()),
        "macro_f1": float(f1.mean()),
        "per_class_f1": [float(x) for x in f1],
        "mae": float(np.abs(g - p).mean()),
    }


def majority_macro_f1(gold: list[int]) -> float:
    """Closed-form macro F1 of always predicting the most common class."""
    g = np.asarray(gold, dtype=int)
    shares = np.bincount(g - 1, minlength=NUM_CLASSES) / len(g)
    p = float(shares.max())
    return 2 * p / (1 + p) / NUM_CLASSES
