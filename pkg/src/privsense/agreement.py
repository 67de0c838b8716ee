"""Krippendorff's alpha over items-by-raters rating matrices.

Supports missing cells and the nominal, interval, and ordinal difference
functions. alpha = 1 - Do/De, computed through the coincidence-matrix
formulation: within each item, every ordered pair of non-missing values
contributes weight 1/(m-1) where m is that item's non-missing count.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    FileUnreadable,
    FormatError,
    NoEligibleAnnotators,
    NoOverlap,
    TooFewValues,
    ZeroExpectedDisagreement,
)

METRICS = ("nominal", "ordinal", "interval")


@dataclass
class RatingMatrix:
    """Items-by-raters grid of optional ratings (NaN marks a missing cell)."""

    item_ids: list[str]
    rater_ids: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.item_ids), len(self.rater_ids)):
            raise FormatError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.item_ids)} items x {len(self.rater_ids)} raters"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[str, str, float]]) -> "RatingMatrix":
        """Build from long-form (item_id, rater_id, value) triples."""
        item_ids = sorted({r[0] for r in rows})
        rater_ids = sorted({r[1] for r in rows})
        item_pos = {v: i for i, v in enumerate(item_ids)}
        rater_pos = {v: i for i, v in enumerate(rater_ids)}
        grid = np.full((len(item_ids), len(rater_ids)), np.nan)
        for item, rater, value in rows:
            i, j = item_pos[item], rater_pos[rater]
            if not math.isnan(grid[i, j]):
                raise FormatError(f"duplicate rating for item {item!r} by rater {rater!r}")
            grid[i, j] = float(value)
        return cls(item_ids, rater_ids, grid)

    def column(self, rater_id: str) -> np.ndarray:
        return self.values[:, self.rater_ids.index(rater_id)]


@dataclass
class AlphaResult:
    alpha: float
    metric: str
    n_pairable: int
    Do: float
    De: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "metric": self.metric,
            "n_pairable": self.n_pairable,
            "Do": self.Do,
            "De": self.De,
        }


@dataclass
class PairwiseAgreement:
    """One alpha per human annotator, with mean and population std."""

    per_rater: dict[str, float]
    mean: float
    std: float
    skipped: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_rater": self.per_rater,
            "mean": self.mean,
            "std": self.std,
            "skipped": self.skipped,
        }


def _delta_squared(metric: str, categories: np.ndarray, marginals: np.ndarray) -> np.ndarray:
    """Pairwise squared-difference matrix over the observed categories.

    Ordinal distances depend on the marginal coincidence counts: the
    distance between two categories is the sum of the marginal frequencies
    from one to the other, counting each endpoint at half weight.
    """
    if metric == "nominal":
        return 1.0 - np.eye(len(categories))
    if metric == "interval":
        return (categories[:, None] - categories[None, :]) ** 2
    if metric == "ordinal":
        cum = np.cumsum(marginals)
        # for c <= k: sum_{g=c..k} n_g - (n_c + n_k)/2
        between = cum[None, :] - cum[:, None] + marginals[:, None]
        delta = between - (marginals[:, None] + marginals[None, :]) / 2.0
        delta = np.triu(delta, k=1)
        delta = delta + delta.T
        return delta**2
    raise FormatError(f"unknown metric {metric!r}; use one of {METRICS}")


def krippendorff_alpha(matrix: RatingMatrix, metric: str = "ordinal") -> AlphaResult:
    """Krippendorff's alpha via the coincidence matrix.

    Raises TooFewValues when no item has two or more ratings, and
    ZeroExpectedDisagreement when every pairable value is identical
    (De = 0, alpha undefined).
    """
    if metric not in METRICS:
        raise FormatError(f"unknown metric {metric!r}; use one of {METRICS}")
    grid = matrix.values
    present = ~np.isnan(grid)
    pairable_rows = present.sum(axis=1) >= 2
    if not pairable_rows.any():
        raise TooFewValues("alpha needs at least one item with two or more ratings")

    pooled = grid[pairable_rows][present[pairable_rows]]
    categories, codes = np.unique(pooled, return_inverse=True)
    k = len(categories)

    # coincidence matrix: counts of ordered within-item pairs, each item
    # contributing with weight 1/(m-1)
    coincidence = np.zeros((k, k))
    offset = 0
    for row_present in present[pairable_rows]:
        m = int(row_present.sum())
        row_codes = codes[offset : offset + m]
        offset += m
        counts = np.bincount(row_codes, minlength=k).astype(float)
        coincidence += (np.outer(counts, counts) - np.diag(counts)) / (m - 1)

    marginals = coincidence.sum(axis=0)
    n = marginals.sum()
    delta2 = _delta_squared(metric, categories, marginals)

    do = float((coincidence * delta2).sum() / n)
    de = float(marginals @ delta2 @ marginals / (n * (n - 1)))
    if de <= 0.0:
        raise ZeroExpectedDisagreement(
            "all pairable values are identical; alpha is undefined"
        )
    alpha = 1.0 - do / de
    return AlphaResult(alpha=alpha, metric=metric, n_pairable=int(round(n)), Do=do, De=de)


def alpha_vs_reference(
    model: Mapping[str, float],
    reference: Mapping[str, float],
    metric: str = "interval",
) -> AlphaResult:
    """Agreement between model scores and a reference rating per item.

    The reference may be non-integer (e.g. averaged human ratings), which
    is why the default difference function is interval.
    """
    shared = sorted(set(model) & set(reference))
    if len(shared) < 2:
        raise NoOverlap(f"only {len(shared)} shared items between model and reference")
    grid = np.array([[model[i], reference[i]] for i in shared], dtype=float)
    matrix = RatingMatrix(item_ids=list(shared), rater_ids=["model", "reference"], values=grid)
    return krippendorff_alpha(matrix, metric=metric)


def pairwise_alpha_suite(
    model: Mapping[str, float],
    humans: RatingMatrix,
    metric: str = "ordinal",
) -> PairwiseAgreement:
    """Alpha between the model and each human annotator separately.

    Each comparison is restricted to the items that annotator rated.
    Annotators sharing fewer than two rated items with the model are
    skipped and reported, as are annotators whose restricted pair has no
    expected disagreement (alpha undefined).
    """
    per_rater: dict[str, float] = {}
    skipped: dict[str, str] = {}
    for j, rater_id in enumerate(humans.rater_ids):
        col = humans.values[:, j]
        pairs = {
            item: (model[item], col[i])
            for i, item in enumerate(humans.item_ids)
            if item in model and not math.isnan(col[i])
        }
        if len(pairs) < 2:
            skipped[rater_id] = f"only {len(pairs)} shared items"
            continue
        items = sorted(pairs)
        grid = np.array([pairs[i] for i in items], dtype=float)
        matrix = RatingMatrix(item_ids=items, rater_ids=["model", rater_id], values=grid)
        try:
            per_rater[rater_id] = krippendorff_alpha(matrix, metric=metric).alpha
        except ZeroExpectedDisagreement:
            skipped[rater_id] = "no expected disagreement (all shared values identical)"
    if not per_rater:
        raise NoEligibleAnnotators(
            "no annotator shares two or more rated items with the model"
        )
    alphas = np.array(list(per_rater.values()))
    return PairwiseAgreement(
        per_rater=per_rater,
        mean=float(alphas.mean()),
        std=float(alphas.std()),  # population std
        skipped=skipped,
    )


def read_matrix_csv(path) -> RatingMatrix:
    """Read a long-form rating matrix: header item_id,rater_id,value."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FileUnreadable(f"cannot read {path}: {e}") from e
    reader = csv.DictReader(text.splitlines())
    required = {"item_id", "rater_id", "value"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise FormatError("rating matrix CSV needs header item_id,rater_id,value", row=1)
    rows = []
    for i, row in enumerate(reader, start=2):
        try:
            rows.append((row["item_id"], row["rater_id"], float(row["value"])))
        except (TypeError, ValueError) as e:
            raise FormatError(f"bad value {row.get('value')!r}", row=i) from e
    if not rows:
        raise FormatError("rating matrix CSV has no data rows")
    return RatingMatrix.from_rows(rows)


def write_alpha_json(path, result: AlphaResult, provenance: Optional[dict] = None) -> None:
    payload = result.to_dict()
    if provenance is not None:
        payload["_provenance"] = provenance
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
