"""Teacher-labeled training data: JSONL with "text" and "teacher_rating"."""

from __future__ import annotations

import json
from pathlib import Path

from . import rating_to_label


def read_labeled_jsonl(path) -> tuple[list[str], list[int]]:
    """Returns (texts, class labels 0..4); rejects missing fields and
    out-of-scale ratings."""
    texts: list[str] = []
    labels: list[int] = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "_provenance" in obj:
            continue
        if "text" not in obj or "teacher_rating" not in obj:
            raise ValueError(f"{path} row {i}: needs both 'text' and 'teacher_rating'")
        rating = obj["teacher_rating"]
        if rating is None:
            raise ValueError(f"{path} row {i}: teacher_rating is null")
        try:
            labels.append(rating_to_label(rating))
        except ValueError as e:
            raise ValueError(f"{path} row {i}: {e}") from e
        texts.append(str(obj["text"]))
    if not texts:
        raise ValueError(f"{path}: no labeled rows")
    return texts, labels
