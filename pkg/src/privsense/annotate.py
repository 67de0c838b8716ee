"""Teacher annotation pipeline: prompt construction, response parsing, and
resumable batch runs against a chat-completion endpoint.

The transport is injectable so tests (and dry runs) never touch a live
endpoint. Completed annotations are appended to an on-disk cache keyed by
(record id, prompt hash, model), so an interrupted run resumes without
re-querying finished records and a repeated run issues no network calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .corpus import TextRecord
from .errors import EmptyText, EndpointUnreachable, NoRatingFound, OutOfRange
from .scale import PrivacyRating

log = logging.getLogger(__name__)

# The scoring prompt. Edits must bump the version: it is part of the cache
# key, so stale labels from an older prompt are never reused.
PROMPT_TEMPLATE_VERSION = "1"

PROMPT_TEMPLATE = """\
Provide a privacy rating scoring on how sensitive or private the user_text, \
for example including personal information or indirectly identifiable information.

Give your answer on a scale of 1 to 5, where 1 means that the user_text is not \
sensitive or private at all, and 5 means that text contains highly sensitive or \
private information.

Here is the scale you should use to build your answer:
1: The user_text is harmless: completely free of any private or sensitive information, either direct or indirect identifiers.
2: The user_text is mostly not private: may contain some indirect identifiers, but is mostly free of sensitive information.
3: The user_text is somewhat private: contains some direct or indirect identifiers, and can be deemed somewhat personal information.
4: The user_text is very private: contains several direct or indirect identifiers, and it is clear that this text contains personal information.
5: The user_text is extremely private: contains highly sensitive information, such as direct personal identifiers, and the text is clearly something that should not be made public.

user_text: {user_text}"""

CLARIFY_SUFFIX = "\n\nAnswer with a single digit from 1 to 5 and nothing else."

STATUS_OK = "ok"
STATUS_PARSE_FAILED = "parse_failed"
STATUS_TRANSPORT_FAILED = "transport_failed"


def build_prompt(text: str) -> str:
    """Substitute the user text into the fixed scoring prompt."""
    if not text.strip():
        raise EmptyText("cannot build a prompt for empty text")
    return PROMPT_TEMPLATE.format(user_text=text)


def parse_rating(raw: str) -> PrivacyRating:
    """Extract the first standalone integer token and check it is in 1..5.

    Leading prose such as "Rating:" is tolerated; an in-range digit
    anywhere wins as long as it is the first integer in the response.
    """
    match = re.search(r"\d+", raw)
    if match is None:
        raise NoRatingFound(f"no integer rating in {raw!r}")
    value = int(match.group())
    if not 1 <= value <= 5:
        raise OutOfRange(value)
    return PrivacyRating(value)


@dataclass
class TeacherConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    max_retries: int = 3
    parallelism: int = 4
    cache_path: str = "teacher_cache.jsonl"
    api_key_env: str = "TEACHER_API_KEY"
    # where the assistant text lives in the response JSON
    response_path: str = "choices.0.message.content"
    votes: int = 1
    backoff_base: float = 0.5
    timeout: float = 30.0

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if not 0 <= self.max_retries <= 10:
            raise ValueError("max_retries must be between 0 and 10")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.votes < 1:
            raise ValueError("votes must be at least 1")


@dataclass
class AnnotationResult:
    record_id: str
    rating: Optional[PrivacyRating]
    raw_response: str
    attempts: int
    status: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "rating": int(self.rating) if self.rating is not None else None,
            "raw_response": self.raw_response,
            "attempts": self.attempts,
            "status": self.status,
        }


class TransportError(Exception):
    """Connection failure or a response we cannot pull assistant text from."""


class HttpTransport:
    """POSTs chat-completion payloads with a bearer token."""

    def __init__(self, endpoint_url: str, timeout: float = 30.0, session=None):
        self.endpoint_url = endpoint_url
        self.timeout = timeout
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def send(self, payload: dict, headers: dict) -> dict:
        import requests

        try:
            resp = self._session.post(
                self.endpoint_url, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as e:
            raise TransportError(str(e)) from e
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as e:
            raise TransportError(f"non-JSON response: {e}") from e


class StubTransport:
    """Deterministic local teacher for dry runs and the e2e pipeline test.

    Rates by simple keyword heuristics with a hash-based spread for plain
    text, wrapped in a chat-completion-shaped response.
    """

    RULES = (
        (5, ("ssn", "passport", "credit card", "diagnosed", "social security")),
        (4, ("medication", "therapist", "salary", "lawsuit", "my address")),
        (3, ("my name is", "email", "phone", "birthday", "i live in")),
        (2, ("my friend", "my boss", "yesterday i", "my city")),
    )

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def send(self, payload: dict, headers: dict) -> dict:
        with self._lock:
            self.calls += 1
        content = payload["messages"][0]["content"]
        user_text = content.split("user_text:", 1)[-1].strip().lower()
        rating = None
        for value, needles in self.RULES:
            if any(n in user_text for n in needles):
                rating = value
                break
        if rating is None:
            digest = hashlib.sha256(user_text.encode("utf-8")).digest()
            rating = 1 if digest[0] % 4 else 2  # mostly harmless tail
        return {"choices": [{"message": {"content": str(rating)}}]}


def _extract(payload, path: str) -> str:
    node = payload
    for part in path.split("."):
        try:
            node = node[int(part)] if part.isdigit() else node[part]
        except (KeyError, IndexError, TypeError) as e:
            raise TransportError(f"response path {path!r} not found") from e
    if not isinstance(node, str):
        raise TransportError(f"response path {path!r} is not text")
    return node


class AnnotationCache:
    """Append-only JSONL cache of successful annotations.

    Concurrent readers are safe; writes are serialized by a lock. Only ok
    results are stored, so failed records are retried on resume.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._entries[entry["key"]] = entry

    def __len__(self):
        return len(self._entries)

    def get(self, key: str) -> Optional[dict]:
        return self._entries.get(key)

    def put(self, key: str, result: AnnotationResult) -> None:
        entry = {"key": key, **result.to_dict()}
        with self._lock:
            self._entries[key] = entry
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")


def cache_key(record_id: str, prompt: str, model_name: str) -> str:
    prompt_hash = hashlib.sha256(
        (PROMPT_TEMPLATE_VERSION + "\x1f" + prompt).encode("utf-8")
    ).hexdigest()
    raw = "\x1f".join([record_id, model_name, prompt_hash])
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


@dataclass
class _BatchState:
    cache_hits: int = 0
    network_attempts: int = 0
    network_successes: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


def annotate_batch(
    records: Sequence[TextRecord],
    config: TeacherConfig,
    transport=None,
    out_path=None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[AnnotationResult]:
    """Annotate records through the teacher endpoint, one result per record.

    Cached records issue no network call. Transport-level failures are
    retried with exponential backoff; a response whose text carries no
    usable rating is retried once with a clarifying suffix. Individual
    failures never abort the batch. Raises EndpointUnreachable only when
    no request ever succeeds and nothing was cached.
    """
    if transport is None:
        if config.endpoint_url.startswith("stub:"):
            transport = StubTransport()
        else:
            transport = HttpTransport(config.endpoint_url, timeout=config.timeout)

    cache = AnnotationCache(config.cache_path)
    state = _BatchState()
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(config.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    def annotate_one(record: TextRecord) -> AnnotationResult:
        if config.votes == 1:
            return _annotate_single(record, "")
        votes = [_annotate_single(record, f"#v{i}") for i in range(config.votes)]
        return _tally_votes(record, votes)

    def _annotate_single(record: TextRecord, vote_tag: str) -> AnnotationResult:
        prompt = build_prompt(record.text)
        key = cache_key(record.id + vote_tag, prompt, config.model_name)
        cached = cache.get(key)
        if cached is not None:
            with state.lock:
                state.cache_hits += 1
            return AnnotationResult(
                record_id=record.id,
                rating=PrivacyRating(cached["rating"]),
                raw_response=cached["raw_response"],
                attempts=cached["attempts"],
                status=STATUS_OK,
            )

        budget = config.max_retries + 1
        attempts = 0
        current_prompt = prompt
        clarified = False
        last_raw = ""
        while attempts < budget:
            attempts += 1
            payload = {
                "model": config.model_name,
                "messages": [{"role": "user", "content": current_prompt}],
                "temperature": config.temperature,
            }
            with state.lock:
                state.network_attempts += 1
            try:
                response = transport.send(payload, headers)
                raw = _extract(response, config.response_path)
            except TransportError as e:
                log.debug("record %s attempt %d transport failure: %s", record.id, attempts, e)
                if attempts < budget:
                    sleep(config.backoff_base * 2 ** (attempts - 1))
                continue
            with state.lock:
                state.network_successes += 1
            last_raw = raw
            try:
                rating = parse_rating(raw)
            except (NoRatingFound, OutOfRange):
                if not clarified and attempts < budget:
                    clarified = True
                    current_prompt = prompt + CLARIFY_SUFFIX
                    continue
                return AnnotationResult(
                    record_id=record.id,
                    rating=None,
                    raw_response=raw,
                    attempts=attempts,
                    status=STATUS_PARSE_FAILED,
                )
            result = AnnotationResult(
                record_id=record.id,
                rating=rating,
                raw_response=raw,
                attempts=attempts,
                status=STATUS_OK,
            )
            cache.put(key, result)
            return result
        return AnnotationResult(
            record_id=record.id,
            rating=None,
            raw_response=last_raw,
            attempts=attempts,
            status=STATUS_TRANSPORT_FAILED,
        )

    if config.parallelism == 1 or len(records) <= 1:
        results = [annotate_one(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(annotate_one, records))

    ok = [r for r in results if r.status == STATUS_OK]
    if records and not ok and state.cache_hits == 0 and state.network_successes == 0:
        raise EndpointUnreachable(
            f"no request against {config.endpoint_url} ever succeeded and the cache is empty"
        )

    if out_path is not None:
        write_results(out_path, results)
    return results


def _tally_votes(record: TextRecord, votes: list[AnnotationResult]) -> AnnotationResult:
    """Majority vote across repeated annotations; ties go to the lower rating."""
    attempts = sum(v.attempts for v in votes)
    ratings = [int(v.rating) for v in votes if v.status == STATUS_OK]
    if not ratings:
        failed = votes[-1]
        return AnnotationResult(record.id, None, failed.raw_response, attempts, failed.status)
    counts = {r: ratings.count(r) for r in set(ratings)}
    best = min(sorted(counts), key=lambda r: -counts[r])
    return AnnotationResult(
        record_id=record.id,
        rating=PrivacyRating(best),
        raw_response=votes[0].raw_response,
        attempts=attempts,
        status=STATUS_OK,
    )


def write_results(path, results: Sequence[AnnotationResult], provenance: dict | None = None) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if provenance is not None:
            fh.write(json.dumps({"_provenance": provenance}, sort_keys=True) + "\n")
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_results(path) -> list[AnnotationResult]:
    results = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "_provenance" in obj:
            continue
        rating = obj.get("rating")
        results.append(
            AnnotationResult(
                record_id=obj["record_id"],
                rating=PrivacyRating(rating) if rating is not None else None,
                raw_response=obj["raw_response"],
                attempts=obj["attempts"],
                status=obj["status"],
            )
        )
    return results


def apply_annotations(
    records: Sequence[TextRecord], results: Sequence[AnnotationResult]
) -> list[TextRecord]:
    """Fill teacher ratings into records; failed records stay unrated."""
    from dataclasses import replace

    by_id = {r.record_id: r for r in results}
    out = []
    for rec in records:
        res = by_id.get(rec.id)
        if res is not None and res.status == STATUS_OK:
            out.append(replace(rec, teacher_rating=res.rating))
        else:
            out.append(rec)
    return out
