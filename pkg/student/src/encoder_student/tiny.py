"""Build a desk-scale pretrained encoder checkpoint locally.

Useful where the model hub is unreachable (CI, air-gapped runs): fits a
word-level tokenizer on the given texts, then pretrains a small BERT with
a short masked-LM pass so the encoder produces informative features, and
saves both in the standard directory layout that finetune() loads. The
real recipe is the same fine-tune with a pretrained base identifier.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path

from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.normalizers import Lowercase
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.processors import TemplateProcessing
from transformers import (
    BertConfig,
    BertForMaskedLM,
    DataCollatorForLanguageModeling,
    PreTrainedTokenizerFast,
)


def make_tiny_encoder(
    out_dir,
    texts: list[str],
    hidden_size: int = 64,
    num_layers: int = 2,
    num_heads: int = 2,
    max_vocab: int = 4000,
    seed: int = 0,
    pretrain_steps: int = 400,
    pretrain_lr: float = 3e-4,
    pretrain_batch: int = 32,
) -> Path:
    """Write a tiny locally-pretrained encoder + tokenizer; returns the directory."""
    import torch

    torch.manual_seed(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    counts = Counter()
    pre = Whitespace()
    for text in texts:
        for token, _ in pre.pre_tokenize_str(text.lower()):
            counts[token] += 1
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab = {tok: i for i, tok in enumerate(specials)}
    for token, _ in counts.most_common(max_vocab - len(specials)):
        vocab[token] = len(vocab)

    tok = Tokenizer(WordLevel(vocab, unk_token="[UNK]"))
    tok.normalizer = Lowercase()
    tok.pre_tokenizer = Whitespace()
    tok.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        pad_token="[PAD]",
        unk_token="[UNK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    fast.save_pretrained(out_dir)

    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 4,
        max_position_embeddings=512,
    )
    model = BertForMaskedLM(config)
    if pretrain_steps > 0:
        _pretrain_mlm(model, fast, texts, pretrain_steps, pretrain_lr, pretrain_batch, seed)
    model.save_pretrained(out_dir)
    return out_dir


def _pretrain_mlm(model, tokenizer, texts, steps, lr, batch_size, seed):
    """Short masked-LM pass; enough for the encoder to separate content."""
    import torch

    collator = DataCollatorForLanguageModeling(tokenizer, mlm_probability=0.15)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    rng = torch.Generator().manual_seed(seed)
    model.train()
    for _ in range(steps):
        idx = torch.randint(0, len(texts), (batch_size,), generator=rng)
        encoded = tokenizer(
            [texts[i] for i in idx],
            padding=True,
            truncation=True,
            max_length=64,
            return_tensors="pt",
        )
        batch = collator(
            [
                {"input_ids": ids, "attention_mask": mask}
                for ids, mask in zip(encoded["input_ids"], encoded["attention_mask"])
            ]
        )
        loss = model(**batch).loss
        loss.backward()
        optimizer.step()
        optimizer.zero_grad()
    model.eval()
