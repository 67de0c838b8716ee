import json
from pathlib import Path

import numpy as np
import pytest

from encoder_student.finetune import FinetuneConfig, finetune
from encoder_student.tiny import make_tiny_encoder

CLASS_WORDS = {
    1: ["weather", "garden", "recipe", "sunny", "flowers", "picnic"],
    2: ["colleague", "meeting", "office", "schedule", "project", "deadline"],
    3: ["name", "email", "phone", "street", "contact", "birthday"],
    4: ["salary", "lawsuit", "therapist", "medication", "divorce", "debt"],
    5: ["ssn", "passport", "diagnosis", "creditcard", "password", "hiv"],
}
FILLER = ["the", "a", "about", "today", "note", "regarding", "update", "item"]


def make_labeled_corpus(n, seed=0):
    """Synthetic teacher-labeled rows with class-distinctive vocabulary."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        rating = int(rng.integers(1, 6))
        words = []
        for _ in range(int(rng.integers(3, 6))):
            words.append(CLASS_WORDS[rating][int(rng.integers(0, len(CLASS_WORDS[rating])))])
            words.append(FILLER[int(rng.integers(0, len(FILLER)))])
        rows.append({"text": " ".join(words), "teacher_rating": rating})
    return rows


def write_jsonl(path, rows):
    Path(path).write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


@pytest.fixture(scope="session")
def corpus_2000(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("corpus")
    rows = make_labeled_corpus(2000, seed=0)
    train, val = rows[:1800], rows[1800:]
    train_path, val_path = tmp / "train.jsonl", tmp / "val.jsonl"
    write_jsonl(train_path, train)
    write_jsonl(val_path, val)
    return {"train_path": train_path, "val_path": val_path, "train": train, "val": val}


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory, corpus_2000):
    out = tmp_path_factory.mktemp("base") / "tiny"
    return make_tiny_encoder(out, [r["text"] for r in corpus_2000["train"]], seed=0)


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory, corpus_2000, tiny_base):
    """One fine-tune at the exact paper recipe, shared across tests."""
    out = tmp_path_factory.mktemp("ckpt") / "student"
    config = FinetuneConfig(base_model=str(tiny_base), seed=0)
    return finetune(corpus_2000["train_path"], corpus_2000["val_path"], config, out)
