"""Privacy scorers: a native hashed n-gram linear model and a remote adapter.

Anything with a score_batch method mapping texts to (rating, class
distribution) pairs can drive the de-identification harness. The native
BaselineScorer is an sklearn-style estimator (fit/predict/predict_proba,
get_params) trained by plain mini-batch SGD on a multinomial logistic
objective, deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, runtime_checkable

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin

from . import metrics
from .corpus import TextRecord
from .errors import (
    EmptyTrainingSet,
    EndpointUnreachable,
    OutOfRange,
    ProtocolError,
    UnlabeledRecord,
)
from .scale import NUM_CLASSES, PrivacyRating, as_rating

ScoredText = tuple[PrivacyRating, Optional[list[float]]]


@runtime_checkable
class Scorer(Protocol):
    """Contract shared by native and remote scorers."""

    def score_batch(self, texts: Sequence[str]) -> list[ScoredText]: ...


CHAR_NGRAM_ORDER = 3


def _hash_counts(text: str, feature_dim: int, word_ngram_orders: Sequence[int]) -> dict[int, float]:
    mask = feature_dim - 1
    counts: dict[int, float] = {}
    normalized = " ".join(text.split()).lower()
    words = normalized.split()
    for order in word_ngram_orders:
        for i in range(len(words) - order + 1):
            token = f"w{order}:" + " ".join(words[i : i + order])
            idx = zlib.crc32(token.encode("utf-8")) & mask
            counts[idx] = counts.get(idx, 0.0) + 1.0
    for i in range(len(normalized) - CHAR_NGRAM_ORDER + 1):
        token = f"c{CHAR_NGRAM_ORDER}:" + normalized[i : i + CHAR_NGRAM_ORDER]
        idx = zlib.crc32(token.encode("utf-8")) & mask
        counts[idx] = counts.get(idx, 0.0) + 1.0
    return counts


def featurize(
    text: str, feature_dim: int = 2**16, word_ngram_orders: Sequence[int] = (1, 2)
) -> sp.csr_matrix:
    """Hash a text into an L2-normalized sparse feature row.

    Features are lowercased word unigrams/bigrams plus character trigrams,
    bucketed by CRC32 into feature_dim slots (feature_dim must be a power
    of two). Empty text yields the zero vector.
    """
    return featurize_batch([text], feature_dim, word_ngram_orders)


def featurize_batch(
    texts: Sequence[str],
    feature_dim: int = 2**16,
    word_ngram_orders: Sequence[int] = (1, 2),
) -> sp.csr_matrix:
    if feature_dim <= 0 or feature_dim & (feature_dim - 1):
        raise ValueError(f"feature_dim must be a power of two, got {feature_dim}")
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts = _hash_counts(text, feature_dim, word_ngram_orders)
        for idx in sorted(counts):
            indices.append(idx)
            data.append(counts[idx])
        indptr.append(len(indices))
    mat = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(texts), feature_dim),
    )
    norms = np.sqrt(mat.multiply(mat).sum(axis=1)).A1
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.diags(scale) @ mat


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(
    weights: np.ndarray, bias: np.ndarray, features: sp.csr_matrix, labels: np.ndarray
) -> float:
    """Mean multinomial cross-entropy; labels are class indices 0..4."""
    logits = features @ weights.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(labels)), labels].mean())


def cross_entropy_grad(
    weights: np.ndarray, bias: np.ndarray, features: sp.csr_matrix, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of cross_entropy_loss w.r.t. weights and bias."""
    n = features.shape[0]
    probs = softmax(features @ weights.T + bias)
    probs[np.arange(n), labels] -= 1.0
    probs /= n
    grad_w = np.asarray((features.T @ probs).T)
    grad_b = probs.sum(axis=0)
    return grad_w, grad_b


class BaselineScorer(BaseEstimator, ClassifierMixin):
    """Hashed n-gram multinomial logistic classifier over the 1..5 scale.

    Training runs mini-batch SGD for `epochs` passes; when validation data
    is given to fit, the epoch with the best validation macro F1 wins.
    Prediction ties break toward the lower (less private) class.
    """

    def __init__(
        self,
        feature_dim: int = 2**16,
        word_ngram_orders: tuple[int, ...] = (1, 2),
        epochs: int = 10,
        lr: float = 0.5,
        batch_size: int = 32,
        seed: int = 0,
    ):
        self.feature_dim = feature_dim
        self.word_ngram_orders = word_ngram_orders
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, texts, ratings, val_texts=None, val_ratings=None):
        texts = list(texts)
        y = np.asarray([int(as_rating(r)) - 1 for r in ratings], dtype=int)
        if not texts:
            raise EmptyTrainingSet("no training texts")
        if len(texts) != len(y):
            raise EmptyTrainingSet(f"{len(texts)} texts vs {len(y)} ratings")

        x = featurize_batch(texts, self.feature_dim, self.word_ngram_orders)
        x_val = y_val = None
        if val_texts is not None and len(val_texts):
            x_val = featurize_batch(list(val_texts), self.feature_dim, self.word_ngram_orders)
            y_val = np.asarray([int(as_rating(r)) for r in val_ratings], dtype=int)

        rng = np.random.default_rng(self.seed)
        w = np.zeros((NUM_CLASSES, self.feature_dim))
        b = np.zeros(NUM_CLASSES)
        best = (-1.0, w.copy(), b.copy())
        self.train_loss_: list[float] = []
        self.val_macro_f1_: list[float] = []

        n = len(texts)
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start : start + self.batch_size]
                gw, gb = cross_entropy_grad(w, b, x[batch], y[batch])
                w -= self.lr * gw
                b -= self.lr * gb
            self.train_loss_.append(cross_entropy_loss(w, b, x, y))
            if x_val is not None:
                pred = self._predict_from(x_val, w, b)
                f1 = metrics.evaluate(y_val, pred).macro_f1
                self.val_macro_f1_.append(f1)
                if f1 > best[0]:
                    best = (f1, w.copy(), b.copy())

        if x_val is not None and best[0] >= 0:
            self.best_epoch_ = int(np.argmax(self.val_macro_f1_))
            self.coef_, self.intercept_ = best[1], best[2]
        else:
            self.best_epoch_ = self.epochs - 1
            self.coef_, self.intercept_ = w, b
        return self

    def _predict_from(self, x, w, b) -> np.ndarray:
        logits = x @ w.T + b
        return np.argmax(logits, axis=1) + 1  # first max -> lower class on ties

    def predict_proba(self, texts) -> np.ndarray:
        self._check_fitted()
        x = featurize_batch(list(texts), self.feature_dim, self.word_ngram_orders)
        return softmax(x @ self.coef_.T + self.intercept_)

    def predict(self, texts) -> list[PrivacyRating]:
        self._check_fitted()
        x = featurize_batch(list(texts), self.feature_dim, self.word_ngram_orders)
        return [PrivacyRating(int(v)) for v in self._predict_from(x, self.coef_, self.intercept_)]

    def score_batch(self, texts: Sequence[str]) -> list[ScoredText]:
        probs = self.predict_proba(texts)
        ratings = np.argmax(probs, axis=1) + 1
        return [
            (PrivacyRating(int(r)), [float(p) for p in row])
            for r, row in zip(ratings, probs)
        ]

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise EmptyTrainingSet("scorer is not trained; call fit or load a model file")

    def save(self, path) -> None:
        meta = {
            "format_version": 1,
            "feature_dim": self.feature_dim,
            "word_ngram_orders": list(self.word_ngram_orders),
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "best_epoch": getattr(self, "best_epoch_", None),
        }
        self._check_fitted()
        with open(path, "wb") as fh:  # keep the exact path, savez would append .npz
            np.savez_compressed(fh, weights=self.coef_, bias=self.intercept_, meta=json.dumps(meta))

    @classmethod
    def load(cls, path) -> "BaselineScorer":
        with np.load(path, allow_pickle=False) as blob:
            meta = json.loads(str(blob["meta"]))
            model = cls(
                feature_dim=int(meta["feature_dim"]),
                word_ngram_orders=tuple(meta["word_ngram_orders"]),
                epochs=int(meta["epochs"]),
                lr=float(meta["lr"]),
                batch_size=int(meta["batch_size"]),
                seed=int(meta["seed"]),
            )
            model.coef_ = blob["weights"]
            model.intercept_ = blob["bias"]
            if meta.get("best_epoch") is not None:
                model.best_epoch_ = int(meta["best_epoch"])
        return model


@dataclass
class TrainConfig:
    epochs: int = 10
    lr: float = 0.5
    seed: int = 0
    feature_dim: int = 2**16
    batch_size: int = 32


def train_baseline(
    train: Sequence[TextRecord],
    val: Sequence[TextRecord],
    config: TrainConfig | None = None,
) -> BaselineScorer:
    """Train the native baseline from labeled TextRecords."""
    config = config or TrainConfig()
    if not train:
        raise EmptyTrainingSet("empty training set")
    unlabeled = [r.id for r in list(train) + list(val) if r.teacher_rating is None]
    if unlabeled:
        raise UnlabeledRecord(unlabeled)
    model = BaselineScorer(
        feature_dim=config.feature_dim,
        epochs=config.epochs,
        lr=config.lr,
        batch_size=config.batch_size,
        seed=config.seed,
    )
    return model.fit(
        [r.text for r in train],
        [r.teacher_rating for r in train],
        val_texts=[r.text for r in val],
        val_ratings=[r.teacher_rating for r in val],
    )


def _encode_request(texts: Sequence[str]) -> bytes:
    # canonical wire serialization, shared with the contract fixture
    return json.dumps({"texts": list(texts)}, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def _validate_response(payload, n_texts: int) -> list[ScoredText]:
    if not isinstance(payload, dict) or "ratings" not in payload or "probs" not in payload:
        raise ProtocolError('score response must be an object with "ratings" and "probs"')
    ratings, probs = payload["ratings"], payload["probs"]
    if len(ratings) != n_texts or len(probs) != n_texts:
        raise ProtocolError(
            f"expected {n_texts} scores, got {len(ratings)} ratings / {len(probs)} probs"
        )
    out: list[ScoredText] = []
    for rating, dist in zip(ratings, probs):
        if not isinstance(rating, int) or isinstance(rating, bool):
            raise ProtocolError(f"non-integer rating {rating!r}")
        if rating < 1 or rating > NUM_CLASSES:
            raise OutOfRange(rating)
        if len(dist) != NUM_CLASSES:
            raise ProtocolError(f"distribution of length {len(dist)}, expected {NUM_CLASSES}")
        vec = [float(p) for p in dist]
        if min(vec) < 0 or abs(sum(vec) - 1.0) > 1e-6:
            raise ProtocolError(f"invalid probability distribution {vec}")
        if vec[rating - 1] < max(vec) - 1e-9:
            raise ProtocolError(f"rating {rating} is not the argmax of {vec}")
        out.append((PrivacyRating(rating), vec))
    return out


class RemoteScorer:
    """Adapter speaking the shared scoring wire protocol.

    POSTs {"texts": [...]} to <endpoint>/score in chunks of at most
    batch_size and reassembles responses in input order. A session object
    with requests' post signature can be injected for testing.
    """

    def __init__(self, endpoint: str, batch_size: int = 32, session=None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.timeout = timeout
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    @property
    def score_url(self) -> str:
        url = self.endpoint.rstrip("/")
        return url if url.endswith("/score") else url + "/score"

    def score_batch(self, texts: Sequence[str]) -> list[ScoredText]:
        texts = list(texts)
        out: list[ScoredText] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start : start + self.batch_size]
            out.extend(self._score_chunk(chunk))
        return out

    def _score_chunk(self, chunk: list[str]) -> list[ScoredText]:
        import requests

        try:
            resp = self._session.post(
                self.score_url,
                data=_encode_request(chunk),
                headers={"Content-Type": "application/json"},
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise EndpointUnreachable(f"cannot reach {self.score_url}: {e}") from e
        if resp.status_code != 200:
            raise ProtocolError(f"{self.score_url} returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as e:
            raise ProtocolError(f"non-JSON response from {self.score_url}") from e
        return _validate_response(payload, len(chunk))


def remote_score(
    endpoint: str, texts: Sequence[str], batch_size: int = 32, session=None
) -> list[ScoredText]:
    """One-shot remote scoring; see RemoteScorer."""
    return RemoteScorer(endpoint, batch_size=batch_size, session=session).score_batch(texts)
