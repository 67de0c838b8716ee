"""HTTP scoring service over a fine-tuned checkpoint.

POST /score with {"texts": [str]} returns {"ratings": [int], "probs":
[[5 floats]]}; ratings are argmax class + 1, probs the softmax. Malformed
bodies get HTTP 400 with a schema message. GET /health reports the model
identifier and label-map version.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from . import LABEL_MAP_VERSION

SCHEMA_MESSAGE = 'body must be a JSON object {"texts": [str, ...]}'


def build_app(checkpoint: str, max_length: int = 512, batch_size: int = 64) -> FastAPI:
    checkpoint = str(checkpoint)
    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
    model.eval()

    model_id = checkpoint
    metrics_file = Path(checkpoint) / "metrics.json"
    if metrics_file.exists():
        try:
            model_id = json.loads(metrics_file.read_text())["config"]["base_model"]
        except (KeyError, json.JSONDecodeError):
            pass

    app = FastAPI(title="privacy-score-student")

    @app.get("/health")
    def health():
        return {"model": model_id, "label_map_version": LABEL_MAP_VERSION}

    @app.post("/score")
    async def score(request: Request):
        try:
            payload = json.loads(await request.body())
        except json.JSONDecodeError:
            return JSONResponse({"error": SCHEMA_MESSAGE}, status_code=400)
        if (
            not isinstance(payload, dict)
            or not isinstance(payload.get("texts"), list)
            or not all(isinstance(t, str) for t in payload["texts"])
        ):
            return JSONResponse({"error": SCHEMA_MESSAGE}, status_code=400)

        texts = payload["texts"]
        ratings: list[int] = []
        probs: list[list[float]] = []
        with torch.no_grad():
            for start in range(0, len(texts), batch_size):
                batch = tokenizer(
                    texts[start : start + batch_size],
                    padding=True,
                    truncation=True,
                    max_length=max_length,
                    return_tensors="pt",
                )
                logits = model(**batch).logits
                soft = torch.softmax(logits, dim=-1)
                ratings.extend(int(i) + 1 for i in soft.argmax(dim=-1))
                probs.extend([float(p) for p in row] for row in soft)
        return {"ratings": ratings, "probs": probs}

    return app


def serve(checkpoint: str, port: int = 8000, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(build_app(checkpoint), host=host, port=port)
