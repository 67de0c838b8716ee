"""Ordinal classification metrics for the 1..5 privacy scale.

Accuracy, per-class and macro F1, MAE (which penalizes a miss by its
distance on the scale), the adjacent-confusion share of errors, and
closed-form majority/random reference baselines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BadDistribution,
    EmptyInput,
    FileUnreadable,
    FormatError,
    LengthMismatch,
    OutOfRange,
)
from .scale import NUM_CLASSES

# Table-1 class-share tolerance: published percentages may round to a sum
# slightly off 1, so validation allows 1e-3 and shares are renormalized.
_SHARE_SUM_TOL = 1e-3


@dataclass
class ConfusionMatrix:
    """5x5 counts, rows = gold class, columns = predicted class."""

    counts: np.ndarray

    @classmethod
    def from_pairs(cls, gold: np.ndarray, pred: np.ndarray) -> "ConfusionMatrix":
        counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=int)
        np.add.at(counts, (gold - 1, pred - 1), 1)
        return cls(counts=counts)

    def to_lists(self) -> list[list[int]]:
        return self.counts.tolist()


@dataclass
class MetricReport:
    accuracy: float
    macro_f1: float
    per_class_f1: list[float]
    mae: float
    adjacent_error_share: float
    confusion: Optional[ConfusionMatrix] = None

    def to_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class_f1": self.per_class_f1,
            "mae": self.mae,
            "adjacent_error_share": self.adjacent_error_share,
        }
        if self.confusion is not None:
            d["confusion"] = self.confusion.to_lists()
        return d


def _check_ratings(values: Sequence[int]) -> np.ndarray:
    arr = np.asarray(values, dtype=int)
    if arr.size and (arr.min() < 1 or arr.max() > NUM_CLASSES):
        bad = arr[(arr < 1) | (arr > NUM_CLASSES)][0]
        raise OutOfRange(int(bad))
    return arr


def evaluate(gold: Sequence[int], pred: Sequence[int]) -> MetricReport:
    """Score predictions against gold ratings.

    Per-class F1 uses the convention F1 = 0 whenever precision + recall
    is 0, so macro F1 is always a mean over all five classes.
    """
    if len(gold) != len(pred):
        raise LengthMismatch(f"gold has {len(gold)} items, pred has {len(pred)}")
    if len(gold) == 0:
        raise EmptyInput("nothing to evaluate")
    g = _check_ratings(gold)
    p = _check_ratings(pred)

    cm = ConfusionMatrix.from_pairs(g, p)
    counts = cm.counts.astype(float)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)

    with np.errstate(invalid="ignore"):
        precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
        recall = np.where(actual > 0, tp / np.maximum(actual, 1), 0.0)
    pr = precision + recall
    f1 = np.where(pr > 0, 2 * precision * recall / np.maximum(pr, 1e-300), 0.0)

    errors = g != p
    n_errors = int(errors.sum())
    adjacent = int((np.abs(g - p) == 1).sum())
    return MetricReport(
        accuracy=float((~errors).mean()),
        macro_f1=float(f1.mean()),
        per_class_f1=[float(x) for x in f1],
        mae=float(np.abs(g - p).mean()),
        adjacent_error_share=adjacent / n_errors if n_errors else 0.0,
        confusion=cm,
    )


def _check_shares(shares: Sequence[float]) -> np.ndarray:
    arr = np.asarray(shares, dtype=float)
    if arr.shape != (NUM_CLASSES,):
        raise BadDistribution(f"need exactly {NUM_CLASSES} class shares, got {arr.shape}")
    if (arr < 0).any():
        raise BadDistribution("class shares must be nonnegative")
    total = arr.sum()
    if abs(total - 1.0) > _SHARE_SUM_TOL:
        raise BadDistribution(f"class shares sum to {total}, expected 1")
    return arr / total


def majority_baseline(gold_distribution: Sequence[float]) -> MetricReport:
    """Expected metrics for the always-predict-the-largest-class classifier.

    Argmax ties break toward the lowest class. With p the majority share:
    accuracy = p, majority-class F1 = 2p/(1+p), every other F1 = 0.
    """
    p = _check_shares(gold_distribution)
    m = int(np.argmax(p))  # first max -> lowest class on ties
    pm = float(p[m])
    f1 = [0.0] * NUM_CLASSES
    f1[m] = 2 * pm / (1 + pm)
    classes = np.arange(NUM_CLASSES)
    mae = float((p * np.abs(classes - m)).sum())
    err = 1.0 - pm
    adjacent = float(p[np.abs(classes - m) == 1].sum())
    return MetricReport(
        accuracy=pm,
        macro_f1=sum(f1) / NUM_CLASSES,
        per_class_f1=f1,
        mae=mae,
        adjacent_error_share=adjacent / err if err > 0 else 0.0,
    )


def random_baseline(gold_distribution: Sequence[float]) -> MetricReport:
    """Expected metrics for a uniform-random predictor over the 5 classes.

    accuracy = 1/5 regardless of the gold distribution; per-class
    F1_c = 2 * (1/5) * p_c / (1/5 + p_c).
    """
    p = _check_shares(gold_distribution)
    u = 1.0 / NUM_CLASSES
    f1 = [float(2 * u * pc / (u + pc)) if (u + pc) > 0 else 0.0 for pc in p]
    classes = np.arange(NUM_CLASSES)
    dist = np.abs(classes[:, None] - classes[None, :])
    mae = float((p[:, None] * u * dist).sum())
    p_adjacent = float((p[:, None] * u * (dist == 1)).sum())
    p_error = float((p[:, None] * u * (dist > 0)).sum())
    return MetricReport(
        accuracy=u,
        macro_f1=sum(f1) / NUM_CLASSES,
        per_class_f1=f1,
        mae=mae,
        adjacent_error_share=p_adjacent / p_error if p_error > 0 else 0.0,
    )


def read_predictions(path) -> tuple[list[int], list[int]]:
    """Read a JSONL prediction file of {"id", "gold", "pred"} objects."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FileUnreadable(f"cannot read {path}: {e}") from e
    gold, pred = [], []
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON: {e}", row=i) from e
        if "_provenance" in obj:
            continue
        try:
            gold.append(int(obj["gold"]))
            pred.append(int(obj["pred"]))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"expected integer gold/pred fields: {e}", row=i) from e
    if not gold:
        raise EmptyInput(f"no prediction rows in {path}")
    return gold, pred


def render_report_table(reports: dict[str, MetricReport]) -> str:
    """Markdown table of metric reports, one row per labelled system."""
    lines = [
        "| Model | Acc. | Macro F1 | MAE | C1 | C2 | C3 | C4 | C5 |",
        "|---|---:|---:|---:|---:|---:|---:|---:|---:|",
    ]
    for label, r in reports.items():
        per_class = " | ".join(f"{100 * f:.1f}" for f in r.per_class_f1)
        lines.append(
            f"| {label} | {100 * r.accuracy:.1f} | {100 * r.macro_f1:.1f} "
            f"| {r.mae:.2f} | {per_class} |"
        )
    return "\n".join(lines)
