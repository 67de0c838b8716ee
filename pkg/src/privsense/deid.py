"""Masking experiments over standoff-annotated documents.

Documents carry typed entity spans (DIRECT, QUASI, NO_MASK). The harness
builds five versions of each document (original, direct-masked,
quasi-masked, fully masked, and 30%-random-masked), scores every version
with a pluggable scorer, and reports the mean privacy score, its drop
versus the original, and the share of documents rated harmless.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyInput, FileUnreadable, FormatError, InvalidSpan, ScorerFailure
from .scorer import Scorer

log = logging.getLogger(__name__)

REDACTED = "[REDACTED]"

DIRECT = "DIRECT"
QUASI = "QUASI"
NO_MASK = "NO_MASK"
CATEGORIES = (DIRECT, QUASI, NO_MASK)

CONDITIONS = ("ORIGINAL", "DIRECT", "QUASI", "ALL", "RANDOM")

_WORD = re.compile(r"\S+")


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    category: str


@dataclass
class StandoffDoc:
    doc_id: str
    text: str
    spans: list[EntitySpan]


@dataclass
class DeidReport:
    condition: str
    mean_score: float
    delta: float
    pct_class1: float
    masked_entity_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_spans(doc: StandoffDoc) -> None:
    n = len(doc.text)
    for s in doc.spans:
        if not (0 <= s.start < s.end <= n):
            raise InvalidSpan(
                f"doc {doc.doc_id}: span ({s.start}, {s.end}) outside text of length {n}"
            )
        if s.category not in CATEGORIES:
            raise FormatError(f"doc {doc.doc_id}: unknown span category {s.category!r}")


def _merge(spans: Iterable[EntitySpan]) -> list[tuple[int, int]]:
    """Merge overlapping or touching spans into disjoint regions."""
    ordered = sorted((s.start, s.end) for s in spans)
    merged: list[tuple[int, int]] = []
    for start, end in ordered:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def apply_mask(doc: StandoffDoc, condition: str) -> tuple[str, int]:
    """Replace the condition's entity spans with the [REDACTED] token.

    ALL masks both DIRECT and QUASI spans; NO_MASK spans are never
    touched. Overlapping or adjacent selected spans collapse into a single
    replacement, and the returned count is the number of replaced regions.
    """
    if condition == "ALL":
        wanted = {DIRECT, QUASI}
    elif condition in (DIRECT, QUASI):
        wanted = {condition}
    else:
        raise FormatError(f"unknown mask condition {condition!r}; use DIRECT, QUASI, or ALL")
    _check_spans(doc)
    regions = _merge(s for s in doc.spans if s.category in wanted)
    text = doc.text
    for start, end in reversed(regions):  # right-to-left keeps earlier offsets valid
        text = text[:start] + REDACTED + text[end:]
    return text, len(regions)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def random_mask(doc: StandoffDoc, fraction: float, seed: int) -> str:
    """Replace round(fraction * word_count) whitespace-delimited words.

    Words are maximal non-whitespace runs, sampled uniformly without
    replacement; deterministic for a fixed seed. A document without words
    is returned unchanged.
    """
    if not 0 < fraction < 1:
        raise FormatError(f"fraction must be in (0, 1), got {fraction}")
    words = [m.span() for m in _WORD.finditer(doc.text)]
    k = _round_half_up(fraction * len(words))
    if k == 0:
        return doc.text
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(words), size=k, replace=False))
    text = doc.text
    for i in reversed(chosen):
        start, end = words[i]
        text = text[:start] + REDACTED + text[end:]
    return text


def evaluate_conditions(
    docs: Sequence[StandoffDoc],
    scorer: Scorer,
    fraction: float = 0.3,
    seed: int = 0,
) -> list[DeidReport]:
    """Score all five masking conditions and report them in fixed order.

    The random condition masks each document with seed + its index so the
    run is reproducible end to end. Scorer exceptions are re-raised with
    the failing condition attached.
    """
    if not docs:
        raise EmptyInput("no documents to evaluate")

    variants: dict[str, tuple[list[str], int]] = {}
    variants["ORIGINAL"] = ([d.text for d in docs], 0)
    for condition in ("DIRECT", "QUASI", "ALL"):
        masked = [apply_mask(d, condition) for d in docs]
        variants[condition] = ([t for t, _ in masked], sum(c for _, c in masked))
    random_texts = [random_mask(d, fraction, seed + i) for i, d in enumerate(docs)]
    n_random = sum(
        _round_half_up(fraction * len(_WORD.findall(d.text))) for d in docs
    )
    variants["RANDOM"] = (random_texts, n_random)

    means: dict[str, float] = {}
    pct1: dict[str, float] = {}
    for condition in CONDITIONS:
        texts, _ = variants[condition]
        try:
            scored = scorer.score_batch(texts)
        except Exception as e:  # propagate with condition context
            raise ScorerFailure(condition, e) from e
        ratings = [int(r) for r, _ in scored]
        means[condition] = float(np.mean(ratings))
        pct1[condition] = 100.0 * sum(1 for r in ratings if r == 1) / len(ratings)

    return [
        DeidReport(
            condition=condition,
            mean_score=means[condition],
            delta=means["ORIGINAL"] - means[condition],
            pct_class1=pct1[condition],
            masked_entity_count=variants[condition][1],
        )
        for condition in CONDITIONS
    ]


def render_deid_table(reports: Sequence[DeidReport]) -> str:
    """Markdown table of per-condition privacy scores."""
    lines = [
        "| Condition | Mean score | Delta | % Class 1 | Masked regions |",
        "|---|---:|---:|---:|---:|",
    ]
    for r in reports:
        delta = "--" if r.condition == "ORIGINAL" else f"{r.delta:.2f}"
        lines.append(
            f"| {r.condition} | {r.mean_score:.2f} | {delta} "
            f"| {r.pct_class1:.1f} | {r.masked_entity_count} |"
        )
    return "\n".join(lines)


def read_standoff(path) -> list[StandoffDoc]:
    """Read standoff documents from JSON.

    Accepts the native form (a list of {doc_id, text, spans} objects, or a
    single such object) and the TAB export form, where each document holds
    per-annotator entity mentions; TAB input is converted with
    tab_to_standoff.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise FileUnreadable(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e}") from e
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list) or not payload:
        raise FormatError(f"{path}: expected a non-empty JSON array of documents")
    if "annotations" in payload[0]:
        return tab_to_standoff(payload)
    docs = []
    for i, obj in enumerate(payload):
        try:
            spans = [
                EntitySpan(start=int(s["start"]), end=int(s["end"]), category=s["category"])
                for s in obj.get("spans", [])
            ]
            docs.append(StandoffDoc(doc_id=obj["doc_id"], text=obj["text"], spans=spans))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"document {i}: {e}") from e
    return docs


def write_standoff(path, docs: Sequence[StandoffDoc]) -> None:
    payload = [
        {
            "doc_id": d.doc_id,
            "text": d.text,
            "spans": [asdict(s) for s in d.spans],
        }
        for d in docs
    ]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def tab_to_standoff(payload: list[dict], annotator: Optional[str] = None) -> list[StandoffDoc]:
    """Convert a TAB-style export into standoff documents.

    Each TAB document nests entity mentions under per-annotator keys; one
    annotator is used per document (the given one, else the first in
    sorted order). Both the raw mention count and the merged-region count
    per category are logged, since they differ when mentions overlap.
    """
    docs = []
    raw_counts = {DIRECT: 0, QUASI: 0}
    merged_counts = {DIRECT: 0, QUASI: 0}
    for i, obj in enumerate(payload):
        try:
            annotations = obj["annotations"]
            chosen = annotator or sorted(annotations)[0]
            mentions = annotations[chosen]["entity_mentions"]
            spans = [
                EntitySpan(
                    start=int(m["start_offset"]),
                    end=int(m["end_offset"]),
                    category=str(m["identifier_type"]),
                )
                for m in mentions
            ]
            doc = StandoffDoc(doc_id=obj["doc_id"], text=obj["text"], spans=spans)
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"TAB document {i}: {e}") from e
        docs.append(doc)
        for category in (DIRECT, QUASI):
            selected = [s for s in doc.spans if s.category == category]
            raw_counts[category] += len(selected)
            merged_counts[category] += len(_merge(selected))
    log.info(
        "TAB import: %d docs; DIRECT %d mentions / %d merged regions; "
        "QUASI %d mentions / %d merged regions",
        len(docs),
        raw_counts[DIRECT],
        merged_counts[DIRECT],
        raw_counts[QUASI],
        merged_counts[QUASI],
    )
    return docs
