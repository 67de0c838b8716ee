"""Fine-tune an encoder for 5-class privacy classification.

Recipe defaults: lr 2e-5 with 10% linear warmup then linear decay, batch
size 16, 3 epochs; the checkpoint with the best validation macro F1 is the
one saved. A metrics.json beside the checkpoint records per-epoch
accuracy, macro F1, and MAE.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import torch
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    get_linear_schedule_with_warmup,
)

from . import LABEL_MAP_VERSION, NUM_CLASSES, label_to_rating
from .data import read_labeled_jsonl
from .metrics import classification_metrics

DEFAULT_BASE_MODEL = "jhu-clsp/ettin-encoder-17m"


@dataclass
class FinetuneConfig:
    base_model: str = DEFAULT_BASE_MODEL
    lr: float = 2e-5
    warmup_fraction: float = 0.10
    batch_size: int = 16
    epochs: int = 3
    seed: int = 0
    max_length: int = 512
    # checkpoint selection is fixed to validation macro F1

    def to_dict(self) -> dict:
        return asdict(self)


def _encode(tokenizer, texts, max_length):
    return tokenizer(
        texts,
        padding=True,
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
    )


@torch.no_grad()
def _predict_ratings(model, tokenizer, texts, max_length, batch_size=64) -> list[int]:
    model.eval()
    ratings: list[int] = []
    for start in range(0, len(texts), batch_size):
        batch = _encode(tokenizer, texts[start : start + batch_size], max_length)
        logits = model(**batch).logits
        ratings.extend(label_to_rating(int(i)) for i in logits.argmax(dim=-1))
    return ratings


def finetune(train_file, val_file, config: FinetuneConfig, out_dir) -> Path:
    """Train on teacher labels and save the best-validation checkpoint.

    Returns the checkpoint directory. Raises ValueError on empty data,
    missing fields, out-of-scale labels, or epochs < 1 (nothing to select).
    """
    if config.epochs < 1:
        raise ValueError("epochs must be at least 1: no checkpoint to select otherwise")

    train_texts, train_labels = read_labeled_jsonl(train_file)
    val_texts, val_labels = read_labeled_jsonl(val_file)
    val_gold = [label_to_rating(v) for v in val_labels]

    torch.manual_seed(config.seed)
    tokenizer = AutoTokenizer.from_pretrained(config.base_model)
    model = AutoModelForSequenceClassification.from_pretrained(
        config.base_model, num_labels=NUM_CLASSES
    )
    model.train()

    n = len(train_texts)
    steps_per_epoch = (n + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr)
    scheduler = get_linear_schedule_with_warmup(
        optimizer,
        num_warmup_steps=int(round(config.warmup_fraction * total_steps)),
        num_training_steps=total_steps,
    )

    labels_tensor = torch.tensor(train_labels, dtype=torch.long)
    shuffler = torch.Generator().manual_seed(config.seed)
    history = []
    best = {"macro_f1": -1.0, "epoch": -1, "state": None}

    for epoch in range(config.epochs):
        model.train()
        order = torch.randperm(n, generator=shuffler)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = _encode(tokenizer, [train_texts[i] for i in idx], config.max_length)
            out = model(**batch, labels=labels_tensor[idx])
            out.loss.backward()
            optimizer.step()
            scheduler.step()
            optimizer.zero_grad()

        val_pred = _predict_ratings(model, tokenizer, val_texts, config.max_length)
        epoch_metrics = classification_metrics(val_gold, val_pred)
        epoch_metrics["epoch"] = epoch
        history.append(epoch_metrics)
        if epoch_metrics["macro_f1"] > best["macro_f1"]:
            best = {
                "macro_f1": epoch_metrics["macro_f1"],
                "epoch": epoch,
                "state": {k: v.detach().clone() for k, v in model.state_dict().items()},
            }

    model.load_state_dict(best["state"])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    metrics_payload = {
        "config": config.to_dict(),
        "label_map_version": LABEL_MAP_VERSION,
        "selection_metric": "val_macro_f1",
        "best_epoch": best["epoch"],
        "epochs": history,
    }
    (out_dir / "metrics.json").write_text(
        json.dumps(metrics_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out_dir
