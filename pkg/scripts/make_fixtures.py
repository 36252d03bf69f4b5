#!/usr/bin/env python3
"""Regenerate the committed replay fixtures and golden outputs.

Builds a synthetic 50-question benchmark (40 numeric, 5 boolean, 5
multiple-choice) with 40 recorded draws per question, plus a disjoint
60-question training set with 20 draws per question. Draw streams are seeded
and correctness-correlated: consistent, well-structured rationales carry
correct answers more often, so the trained scorer stops the adaptive loop
early on most questions. Everything downstream (model file, golden traces,
golden report CSV) is produced through the CLI so the goldens exercise the
same path the acceptance suite replays.

Run from anywhere; paths resolve relative to the repository root:

    python3 scripts/make_fixtures.py
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from rasc.cli import main as rasc_main
from rasc.datasets import save_dataset
from rasc.evaluation import compare_methods
from rasc.generation import SampleRecord, canonical_answer, parse_answer, record_samples
from rasc.traces import read_traces
from rasc.types import AnswerKind, Question, StopReason

TIMESTAMP = "2026-01-01T00:00:00+00:00"
NAMES = ["Maya", "Leo", "Priya", "Samir", "Noor", "Ivy", "Tomas", "Aiko", "Dina", "Omar"]
ADMISSION = "I made a mistake earlier, so let me redo that part. "

# Per-question chance that a non-error draw lands on the gold answer; cycling
# the bank gives the store a spread from near-unanimous to genuinely noisy.
P_CORRECT_BANK = [0.9, 0.8, 0.7, 0.55]
P_ERROR = 0.04
P_ADMISSION_IN_WRONG = 0.35
P_DOMINANT_WRONG = 0.6

NUMERIC_ERROR_TEXTS = [
    "I keep going around in circles and cannot settle on a total here.",
    "The setup is unclear to me and I cannot finish the calculation.",
]
BOOLEAN_ERROR_TEXTS = [
    "I cannot verify the division without more careful work, and I keep losing track.",
]
MC_ERROR_TEXTS = [
    "I cannot decide among the listed options with the information given.",
]


# ---------------------------------------------------------------------------
# Question families: prompt plus correct/wrong rationale templates
# ---------------------------------------------------------------------------


def family_pens(rng: random.Random) -> dict:
    name = rng.choice(NAMES)
    a, b = rng.randint(3, 12), rng.randint(4, 15)
    gold = a * b
    return {
        "kind": AnswerKind.NUMERIC,
        "subject": "arithmetic",
        "prompt": (
            f"{name} packs {a} boxes with {b} pens in each box. "
            f"How many pens does {name} pack in total?"
        ),
        "gold": str(gold),
        "correct": [
            (
                f"Step 1: Each of the {a} boxes holds {b} pens. "
                f"Step 2: Multiplying {a} by {b} gives {a} x {b} = {gold}. "
                f"The answer is {gold}"
            ),
            (
                f"Step 1: There are {a} boxes and every box has {b} pens inside. "
                f"Step 2: The total is {a} x {b} = {gold} pens. "
                f"Step 3: Checking the product once more confirms the count. "
                f"The answer is {gold}"
            ),
            (
                f"Step 1: Count {b} pens per box across all {a} boxes. "
                f"Step 2: {a} times {b} equals {gold}. The answer is {gold}"
            ),
        ],
        "wrong": [
            (
                f"Step 1: There are {a} boxes with {b} pens each. "
                "Step 2: {adm}Adding the two counts gives {w}. The answer is {w}"
            ),
            (
                f"Step 1: Take {b} pens for the {a} boxes. "
                "{adm}Step 2: That comes out to {w}. The answer is {w}"
            ),
        ],
        "distractors": [a + b, gold + 10, max(1, gold - b)],
    }


def family_apples(rng: random.Random) -> dict:
    name = rng.choice(NAMES)
    b = rng.randint(3, 15)
    a = b + rng.randint(4, 25)
    gold = a - b
    return {
        "kind": AnswerKind.NUMERIC,
        "subject": "arithmetic",
        "prompt": (
            f"{name} picked {a} apples and gave {b} of them to friends. "
            f"How many apples does {name} have left?"
        ),
        "gold": str(gold),
        "correct": [
            (
                f"Step 1: {name} starts with {a} apples. "
                f"Step 2: Giving away {b} leaves {a} - {b} = {gold}. "
                f"The answer is {gold}"
            ),
            (
                f"Step 1: Start from the {a} apples that were picked. "
                f"Step 2: Subtract the {b} apples handed to friends. "
                f"Step 3: {a} minus {b} is {gold} apples left over. "
                f"The answer is {gold}"
            ),
        ],
        "wrong": [
            (
                f"Step 1: {name} picked {a} apples and friends took {b}. "
                "Step 2: {adm}Combining them gives {w}. The answer is {w}"
            ),
            (
                f"Step 1: From {a} apples remove {b}. "
                "{adm}I count {w} remaining. The answer is {w}"
            ),
        ],
        "distractors": [a + b, max(1, gold - 1), gold + 2],
    }


def family_travel(rng: random.Random) -> dict:
    v = rng.choice([12, 15, 18, 24, 30, 36, 45])
    t = rng.randint(2, 9)
    gold = v * t
    return {
        "kind": AnswerKind.NUMERIC,
        "subject": "arithmetic",
        "prompt": (
            f"A bus travels at {v} miles per hour for {t} hours. "
            "How many miles does the bus cover?"
        ),
        "gold": str(gold),
        "correct": [
            (
                f"Step 1: The bus moves {v} miles every hour for {t} hours. "
                f"Step 2: Distance is speed times time, so {v} x {t} = {gold} miles. "
                f"The answer is {gold}"
            ),
            (
                f"Step 1: Speed {v} and time {t} multiply into distance. "
                f"Step 2: {v} times {t} comes to {gold}. "
                f"Step 3: The units are miles, matching the question. "
                f"The answer is {gold}"
            ),
        ],
        "wrong": [
            (
                f"Step 1: The bus does {v} miles per hour over {t} hours. "
                "Step 2: {adm}I reckon the distance is {w} miles. The answer is {w}"
            ),
        ],
        "distractors": [v + t, gold + v, max(1, gold - t)],
    }


def family_savings(rng: random.Random) -> dict:
    name = rng.choice(NAMES)
    a, w, s = rng.randint(5, 20), rng.randint(3, 9), rng.randint(4, 30)
    total = a * w
    if s >= total:
        s = total - rng.randint(1, 3)
    gold = total - s
    return {
        "kind": AnswerKind.NUMERIC,
        "subject": "arithmetic",
        "prompt": (
            f"{name} saves {a} dollars each week for {w} weeks and then spends "
            f"{s} dollars on a gift. How many dollars does {name} have left?"
        ),
        "gold": str(gold),
        "correct": [
            (
                f"Step 1: Saving {a} dollars across {w} weeks gives {a} x {w} = {total}. "
                f"Step 2: Spending {s} leaves {total} - {s} = {gold}. "
                f"The answer is {gold}"
            ),
            (
                f"Step 1: Weekly savings of {a} over {w} weeks total {total} dollars. "
                f"Step 2: The gift costs {s} dollars. "
                f"Step 3: Subtracting gives {total} - {s} = {gold} dollars. "
                f"The answer is {gold}"
            ),
        ],
        "wrong": [
            (
                f"Step 1: {name} saves {a} dollars for {w} weeks. "
                "Step 2: {adm}After the gift there are {w} dollars left. "
                "The answer is {w}"
            ),
        ],
        "distractors": [total, gold + s, max(1, a * w - a)],
    }


def family_divisible(rng: random.Random) -> dict:
    d = rng.choice([3, 4, 6, 7, 8, 9])
    if rng.random() < 0.5:
        n, gold = d * rng.randint(4, 30), "yes"
    else:
        n = d * rng.randint(4, 30) + rng.randint(1, d - 1)
        gold = "no"
    r = n % d
    verdict = "leaves nothing over" if r == 0 else f"leaves a remainder of {r}"
    flipped = "no" if gold == "yes" else "yes"
    return {
        "kind": AnswerKind.BOOLEAN,
        "subject": "number theory",
        "prompt": f"Is {n} evenly divisible by {d}?",
        "gold": gold,
        "correct": [
            (
                f"Step 1: Divide {n} by {d} and inspect the remainder. "
                f"Step 2: The division {verdict}. "
                f"The answer is {gold}"
            ),
            (
                f"Step 1: Reduce {n} modulo {d}. "
                f"Step 2: The remainder works out to {r}, which settles it. "
                f"The answer is {gold}"
            ),
        ],
        "wrong": [
            (
                f"Step 1: Dividing {n} by {d} in my head. "
                "{adm}Step 2: The remainder looks nonzero to me. The answer is {w}"
            ),
            (
                f"Step 1: {n} over {d} seems to split cleanly. "
                "{adm}The answer is {w}"
            ),
        ],
        "distractors": [flipped],
    }


def family_options(rng: random.Random) -> dict:
    a, b = rng.randint(11, 49), rng.randint(11, 49)
    s = a + b
    letters = ["A", "B", "C", "D"]
    gold_pos = rng.randrange(4)
    values = []
    used = {s}
    for pos in range(4):
        if pos == gold_pos:
            values.append(s)
            continue
        while True:
            v = s + rng.choice([-12, -7, -3, -1, 1, 2, 5, 9, 14])
            if v > 0 and v not in used:
                used.add(v)
                values.append(v)
                break
    gold = letters[gold_pos]
    listing = " ".join(f"({l}) {v}" for l, v in zip(letters, values))
    wrong_letters = [l for l in letters if l != gold]
    return {
        "kind": AnswerKind.MULTIPLE_CHOICE,
        "subject": "arithmetic",
        "prompt": f"Which option equals {a} + {b}? {listing}",
        "gold": gold,
        "correct": [
            (
                f"Step 1: Compute {a} + {b} = {s}. "
                f"Step 2: Scanning the options, option {gold} lists {s}. "
                f"The answer is ({gold})"
            ),
            (
                f"Step 1: The sum of {a} and {b} is {s}. "
                f"Step 2: Option {gold} matches that value exactly. "
                f"Step 3: None of the other options equals {s}. "
                f"The answer is ({gold})"
            ),
        ],
        "wrong": [
            (
                f"Step 1: Adding {a} and {b} roughly in my head. "
                "{adm}Step 2: Option {w} looks closest. The answer is ({w})"
            ),
        ],
        "distractors": wrong_letters,
    }


FAMILY_MIX = [family_pens, family_apples, family_travel, family_savings]


def build_questions(prefix: str, n_numeric: int, n_boolean: int, n_mc: int,
                    rng: random.Random) -> list[tuple[Question, dict]]:
    specs = []
    for i in range(n_numeric):
        specs.append(FAMILY_MIX[i % len(FAMILY_MIX)](rng))
    for _ in range(n_boolean):
        specs.append(family_divisible(rng))
    for _ in range(n_mc):
        specs.append(family_options(rng))

    out: list[tuple[Question, dict]] = []
    for i, spec in enumerate(specs, start=1):
        spec["p_correct"] = P_CORRECT_BANK[(i - 1) % len(P_CORRECT_BANK)]
        question = Question(
            id=f"{prefix}{i:03d}",
            prompt_text=spec["prompt"],
            answer_kind=spec["kind"],
            gold_answer=canonical_answer(spec["gold"], spec["kind"]),
            subject=spec["subject"],
        )
        out.append((question, spec))
    return out


# ---------------------------------------------------------------------------
# Draw streams
# ---------------------------------------------------------------------------


def error_text(kind: AnswerKind, rng: random.Random) -> str:
    bank = {
        AnswerKind.NUMERIC: NUMERIC_ERROR_TEXTS,
        AnswerKind.BOOLEAN: BOOLEAN_ERROR_TEXTS,
        AnswerKind.MULTIPLE_CHOICE: MC_ERROR_TEXTS,
    }[kind]
    return rng.choice(bank)


def draw_text(spec: dict, rng: random.Random) -> str:
    roll = rng.random()
    if roll < P_ERROR:
        return error_text(spec["kind"], rng)
    if roll < P_ERROR + (1 - P_ERROR) * spec["p_correct"]:
        return rng.choice(spec["correct"])
    pool = spec["distractors"]
    wrong = pool[0] if rng.random() < P_DOMINANT_WRONG else rng.choice(pool)
    adm = ADMISSION if rng.random() < P_ADMISSION_IN_WRONG else ""
    return rng.choice(spec["wrong"]).format(w=wrong, adm=adm)


def build_store(path: Path, questions: list[tuple[Question, dict]], draws: int,
                rng: random.Random) -> None:
    records = []
    for question, spec in questions:
        for index in range(1, draws + 1):
            text = draw_text(spec, rng)
            records.append(
                SampleRecord(
                    question_id=question.id,
                    draw_index=index,
                    raw_text=text,
                    parsed_answer=parse_answer(text, question.answer_kind),
                    model_name="fixture-sim",
                    prompt_style="zero_shot_cot",
                    timestamp=TIMESTAMP,
                )
            )
    path.unlink(missing_ok=True)
    written = record_samples(path, records)
    assert written == len(records)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def run_cli(argv: list[str]) -> None:
    code = rasc_main(argv)
    if code != 0:
        raise SystemExit(f"rasc {' '.join(argv[:2])} exited with {code}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    default_dir = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
    parser.add_argument("--fixtures-dir", type=Path, default=default_dir)
    args = parser.parse_args()

    fixtures = args.fixtures_dir
    golden = fixtures / "golden"
    golden.mkdir(parents=True, exist_ok=True)

    test_rng = random.Random(20260814)
    train_rng = random.Random(101)

    test_questions = build_questions("q", 40, 5, 5, test_rng)
    train_questions = build_questions("t", 48, 6, 6, train_rng)

    dataset = fixtures / "dataset.jsonl"
    store = fixtures / "store.jsonl"
    train_dataset = fixtures / "train_dataset.jsonl"
    train_store = fixtures / "train_store.jsonl"
    model = fixtures / "model.json"

    save_dataset(dataset, [q for q, _ in test_questions])
    save_dataset(train_dataset, [q for q, _ in train_questions])
    build_store(store, test_questions, draws=40, rng=test_rng)
    build_store(train_store, train_questions, draws=20, rng=train_rng)

    run_cli([
        "train", "--dataset", str(train_dataset), "--store", str(train_store),
        "--seed", "0", "--out", str(model),
    ])

    plans = {"cot": [], "sc": [], "esc": [], "ac": [],
             "rasc": ["--model-file", str(model)]}
    for method, extra in plans.items():
        run_cli([
            "run", method, "--dataset", str(dataset), "--store", str(store),
            *extra, "--out", str(golden / f"trace_{method}.jsonl"),
        ])

    run_cli([
        "report",
        *[str(golden / f"trace_{m}.jsonl") for m in plans],
        "--out", str(golden / "report.csv"),
    ])

    # The fixture contract: the adaptive loop must genuinely beat the fixed
    # budget here, otherwise the end-to-end acceptance check is vacuous.
    rasc_traces = read_traces(golden / "trace_rasc.jsonl")
    sc_traces = read_traces(golden / "trace_sc.jsonl")
    sc_by_id = {t.question_id: t for t in sc_traces}
    comparison = compare_methods(
        [float(t.generations_used) for t in rasc_traces],
        [float(sc_by_id[t.question_id].generations_used) for t in rasc_traces],
    )
    early = sum(1 for t in rasc_traces if t.stop_reason is StopReason.BUFFER_FULL)
    mean_gens = sum(t.generations_used for t in rasc_traces) / len(rasc_traces)
    print(
        f"rasc early stops: {early}/{len(rasc_traces)}, mean generations "
        f"{mean_gens:.2f}, vs sc mean_diff {comparison.mean_diff:.2f} "
        f"CI [{comparison.ci95_low:.2f}, {comparison.ci95_high:.2f}]"
    )
    if early <= len(rasc_traces) // 2:
        raise SystemExit("fixture regression: adaptive loop no longer stops early")
    if not (comparison.mean_diff < 0 and comparison.ci95_high < 0):
        raise SystemExit("fixture regression: generation savings CI includes zero")
    return 0


if __name__ == "__main__":
    sys.exit(main())
