"""Command line: finetune a checkpoint, serve it, or build a tiny local base."""

from __future__ import annotations

import argparse
import sys

from .finetune import DEFAULT_BASE_MODEL, FinetuneConfig, finetune


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="encoder-student", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="fine-tune on teacher-labeled JSONL")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--base-model", default=DEFAULT_BASE_MODEL)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--warmup-fraction", type=float, default=0.10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-length", type=int, default=512)

    p = sub.add_parser("serve", help="serve a checkpoint over /score")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    p = sub.add_parser("make-tiny", help="build a tiny local base encoder")
    p.add_argument("--texts", required=True, help="JSONL with a text field")
    p.add_argument("--out", required=True)
    p.add_argument("--hidden-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    if args.command == "finetune":
        config = FinetuneConfig(
            base_model=args.base_model,
            lr=args.lr,
            warmup_fraction=args.warmup_fraction,
            batch_size=args.batch_size,
            epochs=args.epochs,
            seed=args.seed,
            max_length=args.max_length,
        )
        out = finetune(args.train, args.val, config, args.out)
        print(f"checkpoint -> {out}")
        return 0
    if args.command == "serve":
        from .serve import serve

        serve(args.checkpoint, port=args.port, host=args.host)
        return 0
    if args.command == "make-tiny":
        import json
        from pathlib import Path

        from .tiny import make_tiny_encoder

        texts = [
            json.loads(line)["text"]
            for line in Path(args.texts).read_text(encoding="utf-8").splitlines()
            if line.strip() and "_provenance" not in line
        ]
        out = make_tiny_encoder(args.out, texts, hidden_size=args.hidden_size, seed=args.seed)
        print(f"tiny encoder -> {out}")
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
