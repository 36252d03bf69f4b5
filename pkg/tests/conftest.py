"""Shared test helpers: compact builders for answers, samples, and scorers."""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from rasc.features import make_sample
from rasc.types import Answer, AnswerKind, Question, Sample

FIXTURES = Path(__file__).parent / "fixtures"


def numeric(value: str) -> Answer:
    return Answer(kind=AnswerKind.NUMERIC, value=value)


def mc(letter: str) -> Answer:
    return Answer(kind=AnswerKind.MULTIPLE_CHOICE, value=letter)


def err(kind: AnswerKind = AnswerKind.NUMERIC) -> Answer:
    return Answer.parse_failure(kind)


def question(qid: str = "q1", kind: AnswerKind = AnswerKind.NUMERIC, gold: str | None = "4",
             prompt: str = "What is 2 + 2?") -> Question:
    gold_answer = Answer(kind=kind, value=gold) if gold is not None else None
    return Question(id=qid, prompt_text=prompt, answer_kind=kind, gold_answer=gold_answer)


def sample(index: int, answer: Answer, text: str | None = None) -> Sample:
    if text is None:
        text = f"Step 1: work it out. The answer is {answer.value}"
    return make_sample(index, text, answer)


def stream_of(answers: list[Answer], texts: list[str] | None = None) -> list[Sample]:
    """Samples 1..n carrying the given answers (and optional raw texts)."""
    out = []
    for i, answer in enumerate(answers, start=1):
        text = texts[i - 1] if texts is not None else None
        out.append(sample(i, answer, text))
    return out


class ScriptedScorer:
    """Scorer that replays a fixed score sequence, cycling when exhausted."""

    def __init__(self, scores):
        self.scores = list(scores)
        self.calls = 0

    def score(self, features) -> float:
        value = self.scores[self.calls % len(self.scores)]
        self.calls += 1
        return value


@pytest.fixture
def gsm_question() -> Question:
    return question(
        qid="gsm-1",
        prompt="A train travels 18 mph for 5 hours out of a 144 mile trip. How many miles remain?",
        gold="54",
    )
