import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from privsense.corpus import TextRecord
from privsense.scale import PrivacyRating

PRIVATE_SNIPPETS = [
    "my ssn is {n}",
    "ssn {n} do not share",
    "the ssn on file reads {n}",
    "please update my ssn to {n}",
]
HARMLESS_SNIPPETS = [
    "nice weather today number {n}",
    "the game ended {n} to zero",
    "reading a book chapter {n}",
    "lunch special costs {n} dollars",
]


def make_ssn_corpus(n: int, seed: int = 0) -> list[TextRecord]:
    """Synthetic corpus: texts mentioning an SSN are rated 5, the rest 1."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        private = bool(rng.integers(0, 2))
        pool = PRIVATE_SNIPPETS if private else HARMLESS_SNIPPETS
        template = pool[int(rng.integers(0, len(pool)))]
        text = template.format(n=int(rng.integers(100, 999)))
        rating = PrivacyRating(5) if private else PrivacyRating(1)
        records.append(
            TextRecord(id=f"syn-{i}", text=text, dataset="SYN", teacher_rating=rating)
        )
    return records


@pytest.fixture
def ssn_corpus():
    records = make_ssn_corpus(250, seed=0)
    return records[:200], records[200:]


def random_rating_rows(rng, max_items=10, max_raters=5, missing=0.3):
    """Random items-by-raters value lists for alpha property tests."""
    n_items = int(rng.integers(2, max_items + 1))
    n_raters = int(rng.integers(2, max_raters + 1))
    grid = rng.integers(1, 6, size=(n_items, n_raters)).astype(float)
    mask = rng.random((n_items, n_raters)) < missing
    grid[mask] = np.nan
    return grid
