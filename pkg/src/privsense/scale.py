"""The five-point privacy sensitivity scale.

Ratings run from 1 (harmless) to 5 (extremely private). Each value has a
canonical display name and description; both are pure functions of the
value.
"""

from __future__ import annotations

from enum import IntEnum

from .errors import OutOfRange


class PrivacyRating(IntEnum):
    HARMLESS = 1
    MOSTLY_NOT_PRIVATE = 2
    SOMEWHAT_PRIVATE = 3
    VERY_PRIVATE = 4
    EXTREMELY_PRIVATE = 5

    @property
    def label(self) -> str:
        return _LABELS[self.value]

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self.value]


_LABELS = {
    1: "Harmless",
    2: "Mostly not private",
    3: "Somewhat private",
    4: "Very private",
    5: "Extremely private",
}

_DESCRIPTIONS = {
    1: (
        "Completely free of any private or sensitive information, "
        "including direct or indirect identifiers."
    ),
    2: (
        "May contain some indirect identifiers, but is largely free of "
        "sensitive or personal information."
    ),
    3: (
        "Contains some direct or indirect identifiers and can be "
        "considered moderately personal."
    ),
    4: (
        "Contains several direct or indirect identifiers and clearly "
        "includes personal information."
    ),
    5: (
        "Contains highly sensitive personal information or direct "
        "identifiers."
    ),
}

RATING_VALUES = (1, 2, 3, 4, 5)
NUM_CLASSES = 5


def as_rating(value) -> PrivacyRating:
    """Coerce an int-like value to a PrivacyRating, rejecting out-of-scale input."""
    try:
        iv = int(value)
    except (TypeError, ValueError):
        raise OutOfRange(value) from None
    if iv != value or iv < 1 or iv > 5:
        raise OutOfRange(value)
    return PrivacyRating(iv)
