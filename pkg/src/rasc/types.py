"""Core domain types shared across the sampling, scoring, and voting pipeline.

Everything here is immutable after construction; constructors validate the
invariants the rest of the code relies on.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

PARSE_ERROR_VALUE = "ERROR"


class AnswerKind(str, enum.Enum):
    NUMERIC = "numeric"
    MULTIPLE_CHOICE = "multiple_choice"
    BOOLEAN = "boolean"
    FREE_TEXT = "free_text"


class StopReason(str, enum.Enum):
    BUFFER_FULL = "buffer_full"          # adaptive run filled its quality buffer
    BUDGET_EXHAUSTED = "budget_exhausted"  # generation cap reached (or fixed budget drawn)
    CRITERION_MET = "criterion_met"      # baseline-specific early-stop signal fired


@dataclass(frozen=True)
class Answer:
    """A canonicalized final answer, or a parse failure.

    Parse failures carry the sentinel value "ERROR" and never match any other
    answer in voting or consistency checks, not even another parse failure:
    treating failures as mutually consistent would let a pile of unparseable
    generations win a majority.
    """

    kind: AnswerKind
    value: str
    is_parse_error: bool = False

    def __post_init__(self) -> None:
        if self.is_parse_error and self.value != PARSE_ERROR_VALUE:
            raise ValueError("parse-error answers must carry the ERROR sentinel")

    def matches(self, other: Answer) -> bool:
        """Voting/consistency equality. Errors match nothing, including errors."""
        if self.is_parse_error or other.is_parse_error:
            return False
        return self.kind == other.kind and self.value == other.value

    def vote_key(self) -> tuple[str, str] | None:
        """Grouping key for vote aggregation; None for ungroupable errors."""
        if self.is_parse_error:
            return None
        return (self.kind.value, self.value)

    @classmethod
    def parse_failure(cls, kind: AnswerKind) -> Answer:
        return cls(kind=kind, value=PARSE_ERROR_VALUE, is_parse_error=True)


@dataclass(frozen=True)
class Question:
    """A reasoning task, optionally with a gold answer for evaluation."""

    id: str
    prompt_text: str
    answer_kind: AnswerKind
    gold_answer: Answer | None = None
    subject: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("question id must be nonempty")
        if self.gold_answer is not None and self.gold_answer.kind != self.answer_kind:
            raise ValueError(
                f"gold answer kind {self.gold_answer.kind.value!r} does not match "
                f"question kind {self.answer_kind.value!r} (question {self.id})"
            )


@dataclass(frozen=True)
class Sample:
    """One reasoning-answer pair: the t-th generation drawn for a question.

    ``steps`` defaults to the reasoning-step split of ``raw_text``; for
    nonempty text there is always at least one step (the whole text in the
    degenerate case), so step counts are well defined.
    """

    index: int
    raw_text: str
    steps: tuple[str, ...]
    answer: Answer

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("sample index is 1-based")
        if self.raw_text and not self.steps:
            raise ValueError("nonempty raw_text requires at least one step")


# Canonical feature ordering: 3 answer-level components, then 7 reasoning-level.
FEATURE_ORDER: tuple[str, ...] = (
    "local_consistency",
    "global_consistency",
    "parsing_error",
    "rp_length",
    "num_of_steps",
    "step_relevance",
    "question_relevance",
    "error_admitting",
    "local_relevance",
    "global_relevance",
)
N_FEATURES = len(FEATURE_ORDER)


@dataclass(frozen=True)
class FeatureVector:
    """The fixed 10-component quality/consistency feature vector of one sample."""

    local_consistency: int
    global_consistency: int
    parsing_error: int
    rp_length: int
    num_of_steps: int
    step_relevance: float
    question_relevance: float
    error_admitting: int
    local_relevance: float
    global_relevance: float

    def __post_init__(self) -> None:
        for name in ("local_consistency", "global_consistency", "parsing_error", "error_admitting"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")
        if self.rp_length < 0:
            raise ValueError("rp_length must be nonnegative")
        if self.num_of_steps < 1:
            raise ValueError("num_of_steps must be positive")
        for name in ("step_relevance", "question_relevance", "local_relevance", "global_relevance"):
            ratio = getattr(self, name)
            if not 0.0 <= ratio <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_list(self) -> list[float]:
        """Components as floats in the canonical order."""
        return [float(getattr(self, name)) for name in FEATURE_ORDER]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> FeatureVector:
        """Inverse of to_list; restores integer typing of the count/flag fields."""
        if len(values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} components, got {len(values)}")
        kwargs: dict[str, float | int] = {}
        for name, value in zip(FEATURE_ORDER, values):
            if name in _INTEGER_FEATURES:
                kwargs[name] = int(round(value))
            else:
                kwargs[name] = float(value)
        return cls(**kwargs)  # type: ignore[arg-type]


_INTEGER_FEATURES = frozenset(
    ("local_consistency", "global_consistency", "parsing_error", "rp_length",
     "num_of_steps", "error_admitting")
)


@dataclass(frozen=True)
class BufferEntry:
    """A sample admitted to the quality buffer, with its sufficiency score."""

    sample: Sample
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must lie in [0, 1]")


@dataclass(frozen=True)
class SampleEvaluation:
    """Per-draw audit record: what was drawn, how it scored, whether it was admitted.

    Baseline policies draw without scoring; they leave features/score as None
    and mark every draw admitted (all draws participate in their vote).
    """

    sample: Sample
    features: FeatureVector | None = None
    score: float | None = None
    admitted: bool = False


@dataclass(frozen=True)
class RunDecision:
    """Outcome of running one stopping policy on one question."""

    final_answer: Answer
    best_rationale: Sample
    generations_used: int
    stop_reason: StopReason
    per_sample: tuple[SampleEvaluation, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.per_sample and self.generations_used != len(self.per_sample):
            raise ValueError("generations_used must equal the number of per-sample records")
