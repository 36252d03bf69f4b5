#!/usr/bin/env python3
"""Convert a GSM8K-style numeric QA file into the engine's dataset format.

Input: JSONL with {"question": ..., "answer": ...} per line, where the answer
field ends in a "#### <value>" marker (the common grade-school math layout).
Output: the dataset JSONL consumed by the CLI ({id, prompt_text, gold_answer,
answer_kind, subject}).

    python3 scripts/convert_numeric_qa.py gsm8k_test.jsonl dataset.jsonl \
        --prefix gsm --subject "grade school math" --limit 200
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from rasc.datasets import save_dataset
from rasc.generation import canonical_answer
from rasc.types import AnswerKind, Question

_GOLD_MARKER = re.compile(r"####\s*(.+?)\s*$")


def convert(in_path: Path, prefix: str, subject: str, limit: int | None) -> list[Question]:
    questions: list[Question] = []
    with in_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if limit is not None and len(questions) >= limit:
                break
            doc = json.loads(line)
            marker = _GOLD_MARKER.search(doc["answer"].strip())
            if marker is None:
                raise SystemExit(f"{in_path}:{lineno}: no '#### <value>' gold marker")
            questions.append(
                Question(
                    id=f"{prefix}{len(questions) + 1:04d}",
                    prompt_text=doc["question"].strip(),
                    answer_kind=AnswerKind.NUMERIC,
                    gold_answer=canonical_answer(marker.group(1), AnswerKind.NUMERIC),
                    subject=subject,
                )
            )
    if not questions:
        raise SystemExit(f"{in_path}: no questions found")
    return questions


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("input", type=Path)
    parser.add_argument("output", type=Path)
    parser.add_argument("--prefix", default="q", help="question id prefix")
    parser.add_argument("--subject", default="grade school math")
    parser.add_argument("--limit", type=int, default=None, help="keep at most N questions")
    args = parser.parse_args()

    questions = convert(args.input, args.prefix, args.subject, args.limit)
    save_dataset(args.output, questions)
    print(f"wrote {len(questions)} question(s) to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
