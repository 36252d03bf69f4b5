"""Dataset files: JSONL with one question per line.

Fields: id, prompt_text, gold_answer, answer_kind, subject. One loader
serves numeric, multiple-choice, boolean, and free-text sets alike; gold
answers are canonicalized on load so every later comparison is exact string
equality.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .generation import canonical_answer
from .types import AnswerKind, Question


class DatasetError(Exception):
    """A dataset file is unreadable, malformed, or has duplicate ids."""


def _question_from_json(doc: dict) -> Question:
    kind = AnswerKind(doc["answer_kind"])
    gold = None
    if doc.get("gold_answer") is not None:
        gold = canonical_answer(str(doc["gold_answer"]), kind)
    return Question(
        id=str(doc["id"]),
        prompt_text=doc["prompt_text"],
        answer_kind=kind,
        gold_answer=gold,
        subject=doc.get("subject", ""),
    )


def load_dataset(path: str | Path) -> list[Question]:
    """Questions in file order; ids must be unique across the file."""
    dataset_path = Path(path)
    if not dataset_path.exists():
        raise DatasetError(f"dataset {dataset_path} does not exist")
    questions: list[Question] = []
    seen: set[str] = set()
    with dataset_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                question = _question_from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DatasetError(f"{dataset_path}:{lineno}: bad question: {exc}") from exc
            if question.id in seen:
                raise DatasetError(f"{dataset_path}:{lineno}: duplicate question id {question.id!r}")
            seen.add(question.id)
            questions.append(question)
    if not questions:
        raise DatasetError(f"dataset {dataset_path} contains no questions")
    return questions


def save_dataset(path: str | Path, questions: Iterable[Question]) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for question in questions:
            doc = {
                "id": question.id,
                "prompt_text": question.prompt_text,
                "gold_answer": question.gold_answer.value if question.gold_answer else None,
                "answer_kind": question.answer_kind.value,
                "subject": question.subject,
            }
            fh.write(json.dumps(doc) + "\n")
