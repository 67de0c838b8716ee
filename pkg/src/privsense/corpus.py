"""Corpus ingestion, sampling, splitting, and per-dataset statistics.

All operations are pure and deterministic given their inputs and an
explicit seed. Records are identified by a content hash so repeated
ingestion of the same file yields the same ids.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, replace, asdict
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BadFractions,
    EmptyCorpus,
    FileUnreadable,
    FormatError,
    InsufficientData,
    MissingRatings,
)
from .scale import NUM_CLASSES, PrivacyRating, as_rating

log = logging.getLogger(__name__)

# Source tags used in the distilled corpus; user-defined tags are equally valid.
KNOWN_DATASETS = ("BAC", "EE", "MQ", "RC", "RLA", "MHB", "RMHP", "TR", "TW", "YR")

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class TextRecord:
    id: str
    text: str
    dataset: str
    teacher_rating: Optional[PrivacyRating] = None
    split: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "dataset": self.dataset,
            "teacher_rating": int(self.teacher_rating) if self.teacher_rating else None,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TextRecord":
        rating = d.get("teacher_rating")
        return cls(
            id=d["id"],
            text=d["text"],
            dataset=d.get("dataset", ""),
            teacher_rating=as_rating(rating) if rating is not None else None,
            split=d.get("split"),
        )


@dataclass(frozen=True)
class DatasetStats:
    dataset: str
    count: int
    avg_tokens: float
    mean_score: float
    pct_private: float
    class_shares: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_text(text: str) -> str:
    """Lowercase and collapse all whitespace runs to single spaces."""
    return " ".join(text.split()).lower()


def text_hash(text: str) -> str:
    """Hash of the normalized text; the key used by exclusion lists."""
    return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()


def _content_id(dataset: str, text: str) -> str:
    return f"{dataset}-{hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]}"


def ingest(path, dataset: str, format: str = "jsonl") -> list[TextRecord]:
    """Read a raw text file into TextRecords.

    Supported formats: "jsonl" (one object per line with a "text" field),
    "csv" (requires a "text" column), and "plain-lines"/"lines" (one text
    per line). Empty or whitespace-only texts are dropped with a counted
    warning. Ids are the dataset tag plus a content hash; duplicated texts
    get an ordinal suffix so ids stay unique.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FileUnreadable(f"cannot read {path}: {e}") from e

    texts = _parse_texts(raw, format)

    records: list[TextRecord] = []
    seen: dict[str, int] = {}
    dropped = 0
    for text in texts:
        if not text.strip():
            dropped += 1
            continue
        base = _content_id(dataset, text)
        ordinal = seen.get(base, 0)
        seen[base] = ordinal + 1
        rec_id = base if ordinal == 0 else f"{base}-{ordinal}"
        records.append(TextRecord(id=rec_id, text=text, dataset=dataset))

    if dropped:
        log.warning("ingest %s: dropped %d empty/whitespace-only texts", path, dropped)
    if not records:
        raise EmptyCorpus(f"no usable records in {path}")
    return records


def _parse_texts(raw: str, format: str) -> list[str]:
    if format == "jsonl":
        texts = []
        for i, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"invalid JSON: {e}", row=i) from e
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                raise FormatError('expected an object with a string "text" field', row=i)
            texts.append(obj["text"])
        return texts
    if format == "csv":
        reader = csv.DictReader(raw.splitlines())
        if reader.fieldnames is None or "text" not in reader.fieldnames:
            raise FormatError('CSV input requires a "text" column', row=1)
        texts = []
        for i, row in enumerate(reader, start=2):
            value = row.get("text")
            if value is None:
                raise FormatError("missing text cell", row=i)
            texts.append(value)
        return texts
    if format in ("plain-lines", "lines"):
        return raw.splitlines()
    raise FormatError(f"unknown format {format!r}; use jsonl, csv, or plain-lines")


def sample_excluding(
    records: Sequence[TextRecord],
    n: int,
    exclude: set[str],
    seed: int,
) -> list[TextRecord]:
    """Draw n records uniformly without replacement, skipping excluded texts.

    `exclude` holds normalized-text hashes (see text_hash). Deterministic
    for a fixed seed.
    """
    if n < 1:
        raise InsufficientData("sample size must be at least 1")
    eligible = [r for r in records if text_hash(r.text) not in exclude]
    if len(eligible) < n:
        raise InsufficientData(
            f"need {n} records but only {len(eligible)} eligible after exclusion"
        )
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(eligible), size=n, replace=False)
    return [eligible[i] for i in idx]


def split(
    records: Sequence[TextRecord],
    fractions: tuple[float, float, float],
    seed: int,
) -> list[TextRecord]:
    """Assign train/val/test splits at the given fractions.

    Sizes are floor-based with the remainder going to train. Records come
    back in their input order with the split field set; the assignment is
    a deterministic function of the seed.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise BadFractions(f"fractions must be three positive reals, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise BadFractions(f"fractions must sum to 1, got {sum(fractions)}")

    n = len(records)
    n_val = math.floor(fractions[1] * n)
    n_test = math.floor(fractions[2] * n)
    n_train = n - n_val - n_test

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    assignment = {}
    for pos, rec_idx in enumerate(order):
        if pos < n_train:
            assignment[rec_idx] = "train"
        elif pos < n_train + n_val:
            assignment[rec_idx] = "val"
        else:
            assignment[rec_idx] = "test"
    return [replace(r, split=assignment[i]) for i, r in enumerate(records)]


def compute_stats(
    records: Sequence[TextRecord],
    tokenizer: str | Callable[[str], Sequence[str]] = "whitespace",
) -> list[DatasetStats]:
    """Per-dataset privacy statistics plus an "All" aggregate.

    Every record must carry a teacher_rating. avg_tokens uses whitespace
    splitting by default; pass a callable to plug in a subword tokenizer.
    """
    missing = [r.id for r in records if r.teacher_rating is None]
    if missing:
        raise MissingRatings(missing)
    if not records:
        raise EmptyCorpus("no records to compute stats over")

    tokenize = str.split if tokenizer == "whitespace" else tokenizer
    if not callable(tokenize):
        raise FormatError(f"unknown tokenizer {tokenizer!r}; use 'whitespace' or a callable")

    by_dataset: dict[str, list[TextRecord]] = {}
    for r in records:
        by_dataset.setdefault(r.dataset, []).append(r)

    stats = [_stats_for(tag, group, tokenize) for tag, group in sorted(by_dataset.items())]
    stats.append(_stats_for("All", list(records), tokenize))
    return stats


def _stats_for(tag: str, group: list[TextRecord], tokenize) -> DatasetStats:
    n = len(group)
    counts = [0] * NUM_CLASSES
    for r in group:
        counts[int(r.teacher_rating) - 1] += 1
    shares = tuple(c / n for c in counts)
    mean_score = sum((c + 1) * s for c, s in enumerate(shares))
    pct_private = 100.0 * sum(shares[2:])
    avg_tokens = sum(len(tokenize(r.text)) for r in group) / n
    return DatasetStats(
        dataset=tag,
        count=n,
        avg_tokens=avg_tokens,
        mean_score=mean_score,
        pct_private=pct_private,
        class_shares=shares,
    )


def render_stats_table(stats: Iterable[DatasetStats]) -> str:
    """Markdown table of per-dataset statistics, sorted by mean score."""
    rows = sorted(
        (s for s in stats if s.dataset != "All"),
        key=lambda s: s.mean_score,
        reverse=True,
    )
    total = [s for s in stats if s.dataset == "All"]
    lines = [
        "| Dataset | Avg tokens | Mean score | % Private |",
        "|---|---:|---:|---:|",
    ]
    for s in rows + total:
        lines.append(
            f"| {s.dataset} | {s.avg_tokens:.0f} | {s.mean_score:.2f} | {s.pct_private:.1f} |"
        )
    return "\n".join(lines)


def read_records(path) -> list[TextRecord]:
    """Read records from the JSONL pipeline format, skipping provenance lines."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FileUnreadable(f"cannot read {path}: {e}") from e
    records = []
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
            records.append(TextRecord.from_dict(obj))
        except KeyError as e:
            raise FormatError(f"missing field {e}", row=i) from e
    if not records:
        raise EmptyCorpus(f"no records in {path}")
    return records


def write_records(path, records: Iterable[TextRecord], provenance: dict | None = None) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if provenance is not None:
            fh.write(json.dumps({"_provenance": provenance}, sort_keys=True) + "\n")
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_exclusion_list(path) -> set[str]:
    """One normalized-text hash per line; blank lines and # comments ignored."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FileUnreadable(f"cannot read {path}: {e}") from e
    return {ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")}
