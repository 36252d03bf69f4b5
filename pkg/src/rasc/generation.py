"""Sample acquisition: prompts, answer parsing, live API client, replay store.

Two interchangeable sample sources implement the Sampler protocol the
stopping policies consume: a live client speaking the OpenAI-compatible
chat-completion wire format, and a deterministic replay cursor over recorded
JSONL stores. Every benchmark in this repo runs offline from recorded
fixtures; the live client exists to record new ones.
"""
from __future__ import annotations

import fcntl
import json
import logging
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import requests

from .features import make_sample
from .types import Answer, AnswerKind, Question, Sample

log = logging.getLogger(__name__)

API_KEY_ENV = "RASC_API_KEY"
API_BASE_ENV = "RASC_API_BASE"
_RETRY_ATTEMPTS = 3
_BACKOFF_START_S = 1.0
_REQUEST_TIMEOUT_S = 120.0


class GenerationError(Exception):
    """Base for live-generation failures."""


class AuthError(GenerationError):
    pass


class RateLimitError(GenerationError):
    pass


class TransportError(GenerationError):
    pass


class MalformedResponseError(GenerationError):
    pass


class PromptError(GenerationError):
    """Prompt style needs exemplars that were not configured."""


class SamplerExhausted(Exception):
    """A sampler has no more draws for the requested question."""


class StoreError(Exception):
    """Sample store is unreadable, inconsistent, or missing a question."""


class StoreLockError(StoreError):
    """Another writer holds the store's advisory lock."""


class Sampler(Protocol):
    """One generation source; draws are sequential within a question."""

    def next_sample(self, question: Question) -> Sample: ...


# ---------------------------------------------------------------------------
# Generation parameters and prompt construction
# ---------------------------------------------------------------------------

PROMPT_STYLES = ("zero_shot_cot", "few_shot", "least_to_most")

_ZERO_SHOT_SYSTEM = (
    "You are a professional specialized in {subject}. You need to help me answer "
    "the given question. Notice that you need to solve the question step by step "
    "and as detailed as possible. Do not jump to the answer directly. You must "
    "follow the RP format instructions."
)
_FEW_SHOT_SYSTEM = (
    "You are a professional specialized in {subject}. Your task is to answer the "
    "given question using step-by-step reasoning. Follow the examples provided, "
    "breaking down your thought process into clear steps before providing the "
    "final answer."
)
_FEW_SHOT_USER = (
    "Here are two examples of how to solve problems using step-by-step reasoning:\n\n"
    "{exemplars}\n\n"
    "Now, please solve the following question using a similar step-by-step "
    "approach: {question}"
)
_LEAST_TO_MOST_SYSTEM = (
    "You are an expert problem solver specialized in {subject}. Your task is to "
    "break down and solve complex problems using the Least-to-Most approach. This "
    "means you'll divide the main problem into simpler sub-problems, solve them "
    "in order of increasing complexity, and use those solutions to address the "
    "main question."
)
_LEAST_TO_MOST_USER = (
    "Let's solve problems using the Least-to-Most approach. Here's an example:\n\n"
    "{exemplars}\n\n"
    "Now, please use this Least-to-Most approach to solve the following problem. "
    "Break it down into simpler sub-problems, solve them in order, and then use "
    "those solutions to address the main question: {question}"
)


@dataclass(frozen=True)
class GenerationParams:
    model_name: str
    temperature: float = 0.5
    max_tokens: int = 1024
    top_p: float = 0.95
    prompt_style: str = "zero_shot_cot"
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.prompt_style not in PROMPT_STYLES:
            raise ValueError(f"unknown prompt style {self.prompt_style!r}")


def build_prompt(
    question: Question, style: str, exemplars: str | None = None
) -> list[tuple[str, str]]:
    """(role, content) message list for one chat-completion request.

    few_shot and least_to_most embed a fixed exemplar block supplied from
    configuration; requesting them without one is a PromptError.
    """
    subject = question.subject or "general reasoning"
    if style == "zero_shot_cot":
        return [
            ("system", _ZERO_SHOT_SYSTEM.format(subject=subject)),
            ("user", question.prompt_text),
        ]
    if style == "few_shot":
        if not exemplars:
            raise PromptError("few_shot prompting requires an exemplar block; none configured")
        return [
            ("system", _FEW_SHOT_SYSTEM.format(subject=subject)),
            ("user", _FEW_SHOT_USER.format(exemplars=exemplars, question=question.prompt_text)),
        ]
    if style == "least_to_most":
        if not exemplars:
            raise PromptError(
                "least_to_most prompting requires an exemplar block; none configured"
            )
        return [
            ("system", _LEAST_TO_MOST_SYSTEM.format(subject=subject)),
            (
                "user",
                _LEAST_TO_MOST_USER.format(exemplars=exemplars, question=question.prompt_text),
            ),
        ]
    raise ValueError(f"unknown prompt style {style!r}")


# ---------------------------------------------------------------------------
# Answer parsing
# ---------------------------------------------------------------------------

_CUE = re.compile(r"answer\s+is\b|answer\s*:|= ", re.IGNORECASE)
_NUMBER = re.compile(r"[-+]?\$?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?")
_OPTION_LETTER = re.compile(r"(?<![A-Za-z0-9])([A-Ea-e])(?![A-Za-z0-9])")
_OPTION_LETTER_UPPER = re.compile(r"(?<![A-Za-z0-9])([A-E])(?![A-Za-z0-9])")
_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_TRAILING_PUNCT = re.compile(r"[\s.,;:!?]+$")


def canonicalize_numeric(text: str) -> str | None:
    """Canonical form of one numeric literal, or None if unparseable.

    Strips currency symbols and thousands separators; integral values (within
    1e-6) collapse to a bare integer, others to a ≤6-decimal shortest form, so
    "1,234", "$1234", and "1234.0" all compare equal.
    """
    cleaned = text.replace("$", "").replace(",", "").strip()
    try:
        value = float(cleaned)
    except ValueError:
        return None
    nearest = round(value)
    if abs(value - nearest) < 1e-6:
        return str(int(nearest))
    short = f"{value:.6f}".rstrip("0").rstrip(".")
    return short


def _last_cue_match(text: str, value_pattern: re.Pattern[str]) -> re.Match[str] | None:
    """First value match after the latest cue that has one."""
    for cue in reversed(list(_CUE.finditer(text))):
        m = value_pattern.search(text, cue.end())
        if m:
            return m
    return None


def parse_answer(raw_text: str, answer_kind: AnswerKind) -> Answer:
    """Extract a canonical answer from a generation; total, never raises.

    Extraction is cue-anchored ("answer is", "Answer:", "= ") with the last
    cue winning, falling back to the last bare value in the text where one
    exists. Texts with neither a cue-adjacent value nor a bare value yield a
    parse-error answer.
    """
    if answer_kind is AnswerKind.NUMERIC:
        m = _last_cue_match(raw_text, _NUMBER)
        if m is None:
            candidates = list(_NUMBER.finditer(raw_text))
            m = candidates[-1] if candidates else None
        if m is not None:
            canonical = canonicalize_numeric(m.group())
            if canonical is not None:
                return Answer(kind=answer_kind, value=canonical)
        return Answer.parse_failure(answer_kind)

    if answer_kind is AnswerKind.MULTIPLE_CHOICE:
        m = _last_cue_match(raw_text, _OPTION_LETTER)
        if m is None:
            candidates = list(_OPTION_LETTER_UPPER.finditer(raw_text))
            m = candidates[-1] if candidates else None
        if m is not None:
            return Answer(kind=answer_kind, value=m.group(1).upper())
        return Answer.parse_failure(answer_kind)

    if answer_kind is AnswerKind.BOOLEAN:
        candidates = list(_YES_NO.finditer(raw_text))
        if candidates:
            return Answer(kind=answer_kind, value=candidates[-1].group(1).lower())
        return Answer.parse_failure(answer_kind)

    # free text: the trimmed span after the last cue
    for cue in reversed(list(_CUE.finditer(raw_text))):
        span = _TRAILING_PUNCT.sub("", raw_text[cue.end() :]).strip()
        if span:
            return Answer(kind=answer_kind, value=" ".join(span.lower().split()))
    return Answer.parse_failure(answer_kind)


def canonical_answer(value: str, kind: AnswerKind) -> Answer:
    """Canonicalize a trusted answer string (e.g. a dataset gold answer)."""
    text = value.strip()
    if kind is AnswerKind.NUMERIC:
        canonical = canonicalize_numeric(text)
        if canonical is None:
            raise ValueError(f"not a numeric answer: {value!r}")
        return Answer(kind=kind, value=canonical)
    if kind is AnswerKind.MULTIPLE_CHOICE:
        if not re.fullmatch(r"[A-Ea-e]", text):
            raise ValueError(f"not an option letter A-E: {value!r}")
        return Answer(kind=kind, value=text.upper())
    if kind is AnswerKind.BOOLEAN:
        if text.lower() not in ("yes", "no"):
            raise ValueError(f"not a yes/no answer: {value!r}")
        return Answer(kind=kind, value=text.lower())
    return Answer(kind=kind, value=" ".join(text.lower().split()))


# ---------------------------------------------------------------------------
# Sample records and the JSONL store
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleRecord:
    """One recorded generation, as persisted in the store."""

    question_id: str
    draw_index: int
    raw_text: str
    parsed_answer: Answer
    model_name: str
    prompt_style: str
    timestamp: str

    def to_json(self) -> dict:
        return {
            "question_id": self.question_id,
            "draw_index": self.draw_index,
            "raw_text": self.raw_text,
            "parsed_answer": {
                "kind": self.parsed_answer.kind.value,
                "value": self.parsed_answer.value,
                "is_parse_error": self.parsed_answer.is_parse_error,
            },
            "model_name": self.model_name,
            "prompt_style": self.prompt_style,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, doc: dict) -> SampleRecord:
        ans = doc["parsed_answer"]
        return cls(
            question_id=doc["question_id"],
            draw_index=int(doc["draw_index"]),
            raw_text=doc["raw_text"],
            parsed_answer=Answer(
                kind=AnswerKind(ans["kind"]),
                value=ans["value"],
                is_parse_error=bool(ans["is_parse_error"]),
            ),
            model_name=doc["model_name"],
            prompt_style=doc["prompt_style"],
            timestamp=doc["timestamp"],
        )


def _existing_keys(path: Path) -> set[tuple[str, int]]:
    keys: set[tuple[str, int]] = set()
    if not path.exists():
        return keys
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = json.loads(line)
                keys.add((doc["question_id"], int(doc["draw_index"])))
    return keys


def record_samples(store_path: str | Path, records: Iterable[SampleRecord]) -> int:
    """Append records to a JSONL store; returns how many were written.

    Duplicate (question_id, draw_index) keys, whether already on disk or
    repeated in the input, are skipped with a warning, so re-running a
    recording job cannot double-write. A non-blocking advisory lock rejects
    concurrent writers.
    """
    path = Path(store_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seen = _existing_keys(path)
    written = 0
    with path.open("a", encoding="utf-8") as fh:
        try:
            fcntl.lockf(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            raise StoreLockError(f"store {path} is locked by another writer") from exc
        try:
            for record in records:
                key = (record.question_id, record.draw_index)
                if key in seen:
                    log.warning("skipping duplicate record %s", key)
                    continue
                fh.write(json.dumps(record.to_json()) + "\n")
                seen.add(key)
                written += 1
            fh.flush()
        finally:
            fcntl.lockf(fh, fcntl.LOCK_UN)
    return written


class ReplayStore:
    """Recorded generations grouped per question, validated on load."""

    def __init__(self, records: dict[str, list[SampleRecord]]) -> None:
        self.records = records

    @classmethod
    def load(cls, path: str | Path) -> ReplayStore:
        grouped: dict[str, list[SampleRecord]] = {}
        store_path = Path(path)
        if not store_path.exists():
            raise StoreError(f"sample store {store_path} does not exist")
        with store_path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = SampleRecord.from_json(json.loads(line))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise StoreError(f"{store_path}:{lineno}: bad record: {exc}") from exc
                grouped.setdefault(record.question_id, []).append(record)
        for qid, records in grouped.items():
            records.sort(key=lambda r: r.draw_index)
            indices = [r.draw_index for r in records]
            if indices != list(range(1, len(records) + 1)):
                raise StoreError(
                    f"store {store_path}: draws for question {qid!r} are not contiguous from 1"
                )
        return cls(grouped)

    def draws_for(self, question_id: str) -> int:
        return len(self.records.get(question_id, ()))

    def question_ids(self) -> list[str]:
        return sorted(self.records)

    def cursor(self) -> ReplayCursor:
        return ReplayCursor(self)


class ReplayCursor:
    """Sampler over a ReplayStore; one independent cursor per question."""

    def __init__(self, store: ReplayStore) -> None:
        self._store = store
        self._positions: dict[str, int] = {}

    def replay_next(self, question_id: str) -> Sample:
        records = self._store.records.get(question_id)
        if records is None:
            raise StoreError(f"question {question_id!r} is not in the sample store")
        position = self._positions.get(question_id, 0)
        if position >= len(records):
            raise SamplerExhausted(
                f"all {len(records)} recorded draws for question {question_id!r} consumed"
            )
        self._positions[question_id] = position + 1
        record = records[position]
        return make_sample(record.draw_index, record.raw_text, record.parsed_answer)

    def next_sample(self, question: Question) -> Sample:
        return self.replay_next(question.id)


# ---------------------------------------------------------------------------
# Live generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Endpoint:
    """Where chat-completion requests go. Key/base come from the environment."""

    base_url: str
    api_key: str

    @classmethod
    def from_env(cls, env: dict[str, str]) -> Endpoint:
        base = env.get(API_BASE_ENV, "").rstrip("/")
        key = env.get(API_KEY_ENV, "")
        if not base:
            raise AuthError(f"no API endpoint configured; set {API_BASE_ENV}")
        if not key:
            raise AuthError(f"no API key configured; set {API_KEY_ENV}")
        return cls(base_url=base, api_key=key)


def generate_live(
    question: Question,
    params: GenerationParams,
    endpoint: Endpoint,
    *,
    draw_index: int = 1,
    exemplars: str | None = None,
    transport=None,
    sleep=time.sleep,
) -> Sample:
    """One chat-completion request, parsed into a Sample.

    Transient failures (timeouts, 5xx, 429) are retried up to 3 attempts with
    exponential backoff starting at 1 s; auth failures and malformed response
    bodies are immediate, distinct errors. No generation is silently dropped:
    every outcome is a Sample or a raised GenerationError.
    """
    transport = transport if transport is not None else requests.Session()
    messages = [
        {"role": role, "content": content}
        for role, content in build_prompt(question, params.prompt_style, exemplars)
    ]
    body = {
        "model": params.model_name,
        "messages": messages,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
        "top_p": params.top_p,
    }
    if params.seed is not None:
        body["seed"] = params.seed

    last_error: GenerationError | None = None
    for attempt in range(1, _RETRY_ATTEMPTS + 1):
        if attempt > 1:
            sleep(_BACKOFF_START_S * 2 ** (attempt - 2))
            log.info("retrying generation for %s (attempt %d)", question.id, attempt)
        try:
            response = transport.post(
                f"{endpoint.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {endpoint.api_key}"},
                json=body,
                timeout=_REQUEST_TIMEOUT_S,
            )
        except requests.RequestException as exc:
            last_error = TransportError(f"request failed for {question.id}: {exc}")
            continue
        status = getattr(response, "status_code", 0)
        if status in (401, 403):
            raise AuthError(
                f"authentication rejected (HTTP {status}); check {API_KEY_ENV}"
            )
        if status == 429:
            last_error = RateLimitError(f"rate limited on question {question.id}")
            continue
        if status >= 500:
            last_error = TransportError(f"server error HTTP {status} on question {question.id}")
            continue
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(
                f"unexpected chat-completion body for question {question.id}: {exc}"
            ) from exc
        if not isinstance(content, str):
            raise MalformedResponseError(
                f"chat-completion content for question {question.id} is not text"
            )
        answer = parse_answer(content, question.answer_kind)
        return make_sample(draw_index, content, answer)

    assert last_error is not None
    raise last_error


class LiveSampler:
    """Sampler over the live endpoint; tracks per-question draw indices.

    Keeps every drawn SampleRecord in .recorded so callers can persist them.
    Sequential within a question; use one LiveSampler per worker for
    cross-question parallelism.
    """

    def __init__(
        self,
        params: GenerationParams,
        endpoint: Endpoint,
        *,
        exemplars: str | None = None,
        transport=None,
        clock=None,
    ) -> None:
        self._params = params
        self._endpoint = endpoint
        self._exemplars = exemplars
        self._transport = transport
        self._clock = clock
        self._counts: dict[str, int] = {}
        self.recorded: list[SampleRecord] = []

    def next_sample(self, question: Question) -> Sample:
        index = self._counts.get(question.id, 0) + 1
        sample = generate_live(
            question,
            self._params,
            self._endpoint,
            draw_index=index,
            exemplars=self._exemplars,
            transport=self._transport,
        )
        self._counts[question.id] = index
        self.recorded.append(
            SampleRecord(
                question_id=question.id,
                draw_index=index,
                raw_text=sample.raw_text,
                parsed_answer=sample.answer,
                model_name=self._params.model_name,
                prompt_style=self._params.prompt_style,
                timestamp=self._now(),
            )
        )
        return sample

    def _now(self) -> str:
        if self._clock is not None:
            return self._clock()
        from datetime import datetime, timezone

        return datetime.now(timezone.utc).isoformat()


class SequenceSampler:
    """Sampler over in-memory per-question sample lists (tests, fixtures)."""

    def __init__(self, streams: dict[str, list[Sample]]) -> None:
        self._streams = streams
        self._positions: dict[str, int] = {}

    def next_sample(self, question: Question) -> Sample:
        stream = self._streams.get(question.id)
        if stream is None:
            raise StoreError(f"question {question.id!r} has no scripted stream")
        position = self._positions.get(question.id, 0)
        if position >= len(stream):
            raise SamplerExhausted(f"scripted stream for {question.id!r} consumed")
        self._positions[question.id] = position + 1
        return stream[position]
