"""Per-question trace records: the JSONL bridge from runs to evaluation.

One line per question, carrying the method, the stopping decision, and the
per-draw audit trail (features, score, admission flag). Raw generation text
stays in the sample store; traces reference draws by index, which keeps
golden files small and byte-stable. No wall-clock fields: identical runs
serialize identically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .types import (
    Answer,
    AnswerKind,
    FeatureVector,
    Question,
    RunDecision,
    SampleEvaluation,
    StopReason,
)

METHODS = ("cot", "sc", "esc", "ac", "rasc")


class TraceError(Exception):
    """A trace file is unreadable or internally inconsistent."""


def _answer_to_json(answer: Answer) -> dict:
    return {
        "kind": answer.kind.value,
        "value": answer.value,
        "is_parse_error": answer.is_parse_error,
    }


def _answer_from_json(doc: Mapping) -> Answer:
    return Answer(
        kind=AnswerKind(doc["kind"]),
        value=doc["value"],
        is_parse_error=bool(doc["is_parse_error"]),
    )


@dataclass(frozen=True)
class TraceSample:
    """One draw as it appears in a trace: no raw text, just the audit trail."""

    index: int
    answer: Answer
    features: tuple[float, ...] | None
    score: float | None
    admitted: bool


@dataclass(frozen=True)
class TraceRecord:
    """Everything evaluation needs about one question under one method."""

    method: str
    question_id: str
    gold_answer: Answer
    final_answer: Answer
    best_rationale_index: int
    generations_used: int
    stop_reason: StopReason
    config: Mapping[str, object] = field(default_factory=dict)
    per_sample: tuple[TraceSample, ...] = ()

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def correct(self) -> bool:
        return self.final_answer.matches(self.gold_answer)

    @classmethod
    def from_decision(
        cls,
        method: str,
        question: Question,
        decision: RunDecision,
        config: Mapping[str, object] | None = None,
    ) -> TraceRecord:
        per_sample = tuple(_trace_sample(ev) for ev in decision.per_sample)
        return cls(
            method=method,
            question_id=question.id,
            gold_answer=question.gold_answer,
            final_answer=decision.final_answer,
            best_rationale_index=decision.best_rationale.index,
            generations_used=decision.generations_used,
            stop_reason=decision.stop_reason,
            config=dict(config or {}),
            per_sample=per_sample,
        )

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "question_id": self.question_id,
            "gold_answer": _answer_to_json(self.gold_answer),
            "final_answer": _answer_to_json(self.final_answer),
            "correct": self.correct,
            "best_rationale_index": self.best_rationale_index,
            "generations_used": self.generations_used,
            "stop_reason": self.stop_reason.value,
            "config": dict(self.config),
            "per_sample": [
                {
                    "index": ts.index,
                    "answer": _answer_to_json(ts.answer),
                    "features": list(ts.features) if ts.features is not None else None,
                    "score": ts.score,
                    "admitted": ts.admitted,
                }
                for ts in self.per_sample
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> TraceRecord:
        per_sample = tuple(
            TraceSample(
                index=int(ts["index"]),
                answer=_answer_from_json(ts["answer"]),
                features=tuple(ts["features"]) if ts["features"] is not None else None,
                score=ts["score"],
                admitted=bool(ts["admitted"]),
            )
            for ts in doc["per_sample"]
        )
        return cls(
            method=doc["method"],
            question_id=doc["question_id"],
            gold_answer=_answer_from_json(doc["gold_answer"]),
            final_answer=_answer_from_json(doc["final_answer"]),
            best_rationale_index=int(doc["best_rationale_index"]),
            generations_used=int(doc["generations_used"]),
            stop_reason=StopReason(doc["stop_reason"]),
            config=dict(doc["config"]),
            per_sample=per_sample,
        )


def _trace_sample(ev: SampleEvaluation) -> TraceSample:
    features: tuple[float, ...] | None = None
    if ev.features is not None:
        features = tuple(float(v) for v in ev.features.to_list())
    return TraceSample(
        index=ev.sample.index,
        answer=ev.sample.answer,
        features=features,
        score=ev.score,
        admitted=ev.admitted,
    )


def feature_vector_of(sample: TraceSample) -> FeatureVector | None:
    """Rehydrate a trace sample's features, if it carried any."""
    if sample.features is None:
        return None
    return FeatureVector.from_list(sample.features)


def write_traces(path: str | Path, records: Iterable[TraceRecord]) -> None:
    """Write records as JSONL; same records in, byte-identical file out."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")


def read_traces(path: str | Path) -> list[TraceRecord]:
    records: list[TraceRecord] = []
    trace_path = Path(path)
    if not trace_path.exists():
        raise TraceError(f"trace file {trace_path} does not exist")
    with trace_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(TraceRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise TraceError(f"{trace_path}:{lineno}: bad trace record: {exc}") from exc
    return records


def require_shared_dataset(trace_sets: Sequence[Sequence[TraceRecord]]) -> list[str]:
    """Question ids common to all sets, erroring if they diverge.

    Paired comparisons and Gain/Sample are only meaningful over the same
    questions, so a mismatch is an input error, not something to silently
    intersect away.
    """
    if not trace_sets:
        raise TraceError("no trace sets given")
    id_sets = [tuple(t.question_id for t in traces) for traces in trace_sets]
    first = id_sets[0]
    for ids in id_sets[1:]:
        if set(ids) != set(first):
            missing = set(first).symmetric_difference(ids)
            raise TraceError(
                f"traces cover different questions; {len(missing)} ids differ "
                f"(e.g. {sorted(missing)[:3]})"
            )
    return list(first)
