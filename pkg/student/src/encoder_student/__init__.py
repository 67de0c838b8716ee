"""Encoder student: fine-tune a small pretrained transformer on teacher
privacy labels (1..5) and serve it over the shared /score wire protocol."""

__version__ = "0.1.0"

LABEL_MAP_VERSION = "1"
NUM_CLASSES = 5


def rating_to_label(rating: int) -> int:
    """Scale rating 1..5 -> class index 0..4."""
    if not 1 <= int(rating) <= NUM_CLASSES:
        raise ValueError(f"rating {rating} outside 1..5")
    return int(rating) - 1


def label_to_rating(label: int) -> int:
    """Class index 0..4 -> scale rating 1..5."""
    if not 0 <= int(label) < NUM_CLASSES:
        raise ValueError(f"label {label} outside 0..4")
    return int(label) + 1
