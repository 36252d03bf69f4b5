"""Acceptance gate: the eight release criteria, one test per criterion.

Every test prints exactly one `[criterion N] PASS` line on success (run with
-s to see them) and enforces its own wall-clock ceiling. Oracles are
implemented fresh in this file - enumeration voting, exact-Fraction Beta
tails, finite differences - so a regression in the library cannot hide behind
a shared helper.
"""
from __future__ import annotations

import math
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import ScriptedScorer, err, mc, numeric, question, sample, stream_of
from rasc.baselines import beta_stop_probability, run_ac, run_esc, run_sc
from rasc.cli import main as cli_main
from rasc.controller import BufferEntry, RascConfig, run_question, weighted_vote
from rasc.evaluation import compare_methods, gain_per_sample, tradeoff_metric
from rasc.features import History, extract_features, jaccard, make_sample, split_steps, word_tokens
from rasc.generation import SequenceSampler
from rasc.scorer import TrainConfig, TrainingExample, loss_and_gradient, train_with_history
from rasc.traces import read_traces
from rasc.types import FeatureVector, StopReason

FIXTURES = Path(__file__).parent / "fixtures"


def _finish(criterion: int, limit: float, start: float, detail: str) -> None:
    elapsed = time.perf_counter() - start
    assert elapsed < limit, f"criterion {criterion} took {elapsed:.2f}s, limit {limit:.0f}s"
    print(f"[criterion {criterion}] PASS ({elapsed:.2f}s < {limit:.0f}s): {detail}")


# ---------------------------------------------------------------------------
# Criterion 1: published Gain/Sample cells reproduce within +/- 0.005
# ---------------------------------------------------------------------------

# (single-sample accuracy, method accuracy, avg generations, printed value)
GAIN_TABLE = [
    # larger model: math / commonsense / symbolic
    (82.1, 87.5, 40.00, 0.139), (82.1, 87.3, 6.86, 0.889),
    (82.1, 87.3, 5.89, 1.065), (82.1, 87.5, 4.59, 1.503),
    (83.2, 88.0, 40.00, 0.123), (83.2, 88.5, 7.93, 0.767),
    (83.2, 87.2, 6.15, 0.779), (83.2, 88.3, 4.74, 1.367),
    (92.5, 97.3, 40.00, 0.123), (92.5, 97.3, 5.54, 1.056),
    (92.5, 97.3, 4.43, 1.395), (92.5, 97.3, 4.19, 1.500),
    # smaller model: math / commonsense / symbolic
    (63.5, 69.1, 40.00, 0.144), (63.5, 69.3, 14.94, 0.417),
    (63.5, 67.6, 12.49, 0.357), (63.5, 69.4, 6.62, 1.054),
    (71.2, 76.1, 40.00, 0.126), (71.2, 76.4, 10.86, 0.527),
    (71.2, 75.0, 8.34, 0.517), (71.2, 76.1, 4.95, 1.238),
    (80.1, 85.3, 40.00, 0.134), (80.1, 86.0, 7.55, 0.903),
    (80.1, 84.7, 6.39, 0.853), (80.1, 85.3, 4.36, 1.547),
]


def test_criterion_1_gain_per_sample_reproduction():
    start = time.perf_counter()
    worst = 0.0
    for cot_acc, acc, gens, printed in GAIN_TABLE:
        got = gain_per_sample(acc, cot_acc, gens)
        worst = max(worst, abs(got - printed))
        assert abs(got - printed) <= 0.005, (cot_acc, acc, gens, printed, got)
    _finish(1, 1.0, start, f"24/24 published cells within 0.005 (worst {worst:.4f})")


# ---------------------------------------------------------------------------
# Criterion 2: weighted vote equals enumeration on 10,000 random buffers
# ---------------------------------------------------------------------------


def _enumeration_vote(entries):
    """Independent oracle: explicit totals, strict-max walk, earliest ties."""
    totals: dict[str, float] = {}
    for entry in entries:
        value = entry.sample.answer.value
        totals[value] = totals.get(value, 0.0) + entry.score
    best_value, best_total = None, None
    for value, total in totals.items():  # first-admission order
        if best_total is None or total > best_total:
            best_value, best_total = value, total
    winners = [e for e in entries if e.sample.answer.value == best_value]
    best = winners[0]
    for entry in winners[1:]:
        if entry.score > best.score:
            best = entry
    return best_value, best.sample.index


def test_criterion_2_voting_oracle_equivalence():
    start = time.perf_counter()
    rng = random.Random(2024)
    tie_grid = [0.125, 0.25, 0.375, 0.5]
    for _ in range(10_000):
        size = rng.randint(1, 6)
        entries = []
        for i in range(1, size + 1):
            value = rng.choice("1234")
            score = rng.choice(tie_grid) if rng.random() < 0.5 else rng.random()
            entries.append(BufferEntry(sample=sample(i, numeric(value)), score=score))
        answer, rationale = weighted_vote(entries)
        oracle_value, oracle_index = _enumeration_vote(entries)
        assert answer.value == oracle_value
        assert rationale.index == oracle_index
    _finish(2, 10.0, start, "10,000 buffers agree exactly, ties included")


# ---------------------------------------------------------------------------
# Criterion 3: stopping semantics of the adaptive loop, ESC, and AC
# ---------------------------------------------------------------------------


def _binomial_stop_tail(lead: int, runner: int) -> Fraction:
    n = lead + runner + 1
    return Fraction(sum(math.comb(n, j) for j in range(lead + 1)), 2**n)


def test_criterion_3_stopping_semantics():
    start = time.perf_counter()
    q = question()

    # (a) the defaults stop at exactly N admissions
    config = RascConfig()
    assert (config.threshold_T, config.capacity_N) == (0.5, 5)
    answers = [numeric("4")] * 12
    decision = run_question(q, SequenceSampler({q.id: stream_of(answers)}),
                            ScriptedScorer([0.9]), config)
    assert decision.generations_used == 5
    assert decision.stop_reason is StopReason.BUFFER_FULL
    decision = run_question(q, SequenceSampler({q.id: stream_of(answers)}),
                            ScriptedScorer([0.9, 0.1]), config)
    assert decision.generations_used == 9  # admissions at draws 1,3,5,7,9
    assert [ev.admitted for ev in decision.per_sample] == [True, False] * 4 + [True]

    # (b) budget exhaustion votes over every draw, not the (empty) buffer
    answers = [numeric("4")] + [numeric("9")] * 39
    decision = run_question(q, SequenceSampler({q.id: stream_of(answers)}),
                            ScriptedScorer([0.2]), RascConfig(0.5, 5, 40))
    assert decision.stop_reason is StopReason.BUDGET_EXHAUSTED
    assert decision.generations_used == 40
    assert decision.final_answer.value == "9"

    # (c) ESC stops at the first uniform window, always on window multiples
    def esc_gens(letters: str, window: int = 5, max_draws: int = 40) -> int:
        answers = [err() if c == "*" else numeric(c) for c in letters]
        return run_esc(q, SequenceSampler({q.id: stream_of(answers)}),
                       window=window, max_draws=max_draws).generations_used

    assert esc_gens("11111" + "2" * 35) == 5
    assert esc_gens("11112" + "11111" + "2" * 30) == 10
    assert esc_gens("12" * 20) == 40
    rng = random.Random(3)
    for _ in range(50):
        letters = "".join(rng.choice("12") for _ in range(12))
        assert esc_gens(letters, window=3, max_draws=12) % 3 == 0

    # (d) AC stops at the first Beta tail >= 0.95, exact-Fraction cross-check
    for lead in range(41):
        for runner in range(41):
            exact = _binomial_stop_tail(lead, runner)
            assert abs(beta_stop_probability(lead, runner) - float(exact)) < 1e-12

    def ac_oracle_gens(letters: str) -> int:
        for t in range(2, len(letters) + 1):
            counts: dict[str, int] = {}
            for c in letters[:t]:
                counts[c] = counts.get(c, 0) + 1
            ranked = sorted(counts.values(), reverse=True)
            lead, runner = ranked[0], ranked[1] if len(ranked) > 1 else 0
            if float(_binomial_stop_tail(lead, runner)) >= 0.95:
                return t
        return len(letters)

    assert ac_oracle_gens("1111") == 4  # tail 31/32 at four agreeing draws
    for _ in range(100):
        letters = "".join(rng.choice("12") for _ in range(17))
        answers = [numeric(c) for c in letters]
        decision = run_ac(q, SequenceSampler({q.id: stream_of(answers)}),
                          confidence=0.95, max_draws=17)
        assert decision.generations_used == ac_oracle_gens(letters)
    _finish(3, 5.0, start, "adaptive/ESC/AC stop rules exact, Beta tail to 1e-12")


# ---------------------------------------------------------------------------
# Criterion 4: T=0 with uniform scores degenerates to fixed-budget voting
# ---------------------------------------------------------------------------


def test_criterion_4_degenerates_to_fixed_budget():
    start = time.perf_counter()
    rng = random.Random(77)
    n = 5
    for _ in range(1_000):
        values = [rng.choice("123*") for _ in range(n)]
        answers = [err() if v == "*" else numeric(v) for v in values]
        q = question()
        adaptive = run_question(
            q,
            SequenceSampler({q.id: stream_of(answers)}),
            ScriptedScorer([0.5]),
            RascConfig(threshold_T=0.0, capacity_N=n, max_generations=n),
        )
        fixed = run_sc(q, SequenceSampler({q.id: stream_of(answers)}), k=n)
        assert adaptive.generations_used == n == fixed.generations_used
        assert adaptive.final_answer == fixed.final_answer
    _finish(4, 10.0, start, "1,000 streams: zero-threshold run equals fixed-budget vote")


# ---------------------------------------------------------------------------
# Criterion 5: scorer gradient, separable training, monotone loss
# ---------------------------------------------------------------------------


def _random_vector(rng: np.random.Generator) -> FeatureVector:
    return FeatureVector(
        local_consistency=int(rng.integers(0, 2)),
        global_consistency=int(rng.integers(0, 2)),
        parsing_error=int(rng.integers(0, 2)),
        rp_length=int(rng.integers(1, 120)),
        num_of_steps=int(rng.integers(1, 9)),
        step_relevance=float(rng.uniform()),
        question_relevance=float(rng.uniform()),
        error_admitting=int(rng.integers(0, 2)),
        local_relevance=float(rng.uniform()),
        global_relevance=float(rng.uniform()),
    )


def _separable_examples(rng: np.random.Generator, count: int) -> list[TrainingExample]:
    examples = []
    for i in range(count):
        label = i % 2
        hi = 0.8 + 0.2 * rng.uniform()
        lo = 0.2 * rng.uniform()
        examples.append(
            TrainingExample(
                features=FeatureVector(
                    local_consistency=label,
                    global_consistency=label,
                    parsing_error=1 - label,
                    rp_length=int(rng.integers(20, 60)) + 40 * label,
                    num_of_steps=int(rng.integers(1, 4)) + 2 * label,
                    step_relevance=hi if label else lo,
                    question_relevance=hi if label else lo,
                    error_admitting=1 - label,
                    local_relevance=hi if label else lo,
                    global_relevance=hi if label else lo,
                ),
                label=label,
            )
        )
    return examples


def test_criterion_5_scorer_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        X = rng.normal(size=(12, 10))
        y = rng.integers(0, 2, size=12).astype(np.float64)
        w = rng.normal(size=10)
        b = float(rng.normal())
        _, grad_w, grad_b = loss_and_gradient(w, b, X, y, l2=1e-4)
        for j in range(10):
            bump = np.zeros(10)
            bump[j] = h
            hi, _, _ = loss_and_gradient(w + bump, b, X, y, l2=1e-4)
            lo, _, _ = loss_and_gradient(w - bump, b, X, y, l2=1e-4)
            worst = max(worst, abs((hi - lo) / (2 * h) - grad_w[j]))
        hi, _, _ = loss_and_gradient(w, b + h, X, y, l2=1e-4)
        lo, _, _ = loss_and_gradient(w, b - h, X, y, l2=1e-4)
        worst = max(worst, abs((hi - lo) / (2 * h) - grad_b))
    assert worst < 1e-5

    examples = _separable_examples(rng, 200)
    model, losses = train_with_history(examples, TrainConfig(learning_rate=0.1, seed=0))
    hits = sum(
        1 for ex in examples if (model.score(ex.features) >= 0.5) == bool(ex.label)
    )
    assert hits / len(examples) >= 0.99
    assert all(later <= earlier + 1e-12 for earlier, later in zip(losses, losses[1:]))
    _finish(
        5, 5.0, start,
        f"max gradient error {worst:.2e}; separable accuracy {hits / len(examples):.3f}; "
        "loss monotone",
    )


# ---------------------------------------------------------------------------
# Criterion 6: categorical feature examples exact + Jaccard property suite
# ---------------------------------------------------------------------------


def _answer_flags(answers, texts=None):
    samples = stream_of(answers, texts)
    history = History.from_samples(samples[:-1])
    v = extract_features(question(), samples[-1], history)
    return v.local_consistency, v.global_consistency, v.parsing_error


def test_criterion_6_feature_correctness():
    start = time.perf_counter()

    # answer-level worked examples
    assert _answer_flags([numeric("3"), numeric("2")])[0] == 0
    assert _answer_flags([numeric("3"), numeric("3")])[0] == 1
    assert _answer_flags([mc("A"), mc("B"), mc("A")])[1] == 1
    assert _answer_flags([mc("A"), mc("B"), mc("C")])[1] == 0
    assert _answer_flags([err()], ["no idea"])[2] == 1
    assert _answer_flags([numeric("2")])[2] == 0

    # reasoning-level worked examples
    assert len(word_tokens("I love LLM")) == 3
    assert len(split_steps("Step1:xxx, Step2:xxx")) == 2
    admitting = make_sample(
        1, "It seems that I made a mistake in the previous steps", err()
    )
    assert extract_features(question(), admitting, History()).error_admitting == 1
    clean = extract_features(question(), make_sample(1, "I love LLM", numeric("4")), History())
    assert clean.error_admitting == 0
    assert clean.rp_length == 3

    # Jaccard property suite on random token sets
    rng = random.Random(6)
    vocab = [f"w{i}" for i in range(30)]
    for _ in range(10_000):
        a = rng.sample(vocab, rng.randint(0, 8))
        b = rng.sample(vocab, rng.randint(0, 8))
        j = jaccard(a, b)
        assert 0.0 <= j <= 1.0
        assert j == jaccard(b, a)
        if a:
            assert jaccard(a, a) == 1.0
        if a and b and not set(a) & set(b):
            assert j == 0.0
    assert jaccard([], []) == 0.0
    _finish(6, 5.0, start, "categorical examples exact; 10,000 Jaccard pairs clean")


# ---------------------------------------------------------------------------
# Criterion 7: end-to-end determinism over the committed replay fixture
# ---------------------------------------------------------------------------

METHOD_PLANS = {
    "cot": [],
    "sc": [],
    "esc": [],
    "ac": [],
    "rasc": ["--model-file", str(FIXTURES / "model.json")],
}


def _run_benchmark(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    base = [
        "--dataset", str(FIXTURES / "dataset.jsonl"),
        "--store", str(FIXTURES / "store.jsonl"),
    ]
    for method, extra in METHOD_PLANS.items():
        code = cli_main(
            ["run", method, *base, *extra, "--out", str(out_dir / f"trace_{method}.jsonl")]
        )
        assert code == 0, method
    code = cli_main(
        [
            "report",
            *[str(out_dir / f"trace_{m}.jsonl") for m in METHOD_PLANS],
            "--out", str(out_dir / "report.csv"),
        ]
    )
    assert code == 0


def test_criterion_7_end_to_end_determinism(tmp_path):
    start = time.perf_counter()
    first, second = tmp_path / "first", tmp_path / "second"
    _run_benchmark(first)
    _run_benchmark(second)

    golden = FIXTURES / "golden"
    for name in [f"trace_{m}.jsonl" for m in METHOD_PLANS] + ["report.csv"]:
        run_a = (first / name).read_bytes()
        run_b = (second / name).read_bytes()
        assert run_a == run_b, f"{name} differs between identical runs"
        assert run_a == (golden / name).read_bytes(), f"{name} differs from golden"

    sc_traces = {t.question_id: t for t in read_traces(first / "trace_sc.jsonl")}
    rasc_traces = read_traces(first / "trace_rasc.jsonl")
    saving = compare_methods(
        [float(t.generations_used) for t in rasc_traces],
        [float(sc_traces[t.question_id].generations_used) for t in rasc_traces],
    )
    assert saving.mean_diff < 0
    assert saving.ci95_high < 0
    _finish(
        7, 30.0, start,
        f"two runs byte-identical to goldens; generation saving {saving.mean_diff:.2f} "
        f"CI [{saving.ci95_low:.2f}, {saving.ci95_high:.2f}]",
    )


# ---------------------------------------------------------------------------
# Criterion 8: trade-off metric corner cases hold exactly
# ---------------------------------------------------------------------------


def test_criterion_8_tradeoff_corners():
    start = time.perf_counter()
    anchors = dict(sc_acc=0.9, sc_cost=40.0, single_sample_acc=0.6)
    assert tradeoff_metric(0.9, 1.0, **anchors) == 1.0
    assert tradeoff_metric(0.6, 40.0, **anchors) == 0.0
    assert tradeoff_metric(0.9, 40.0, **anchors) == 0.5
    assert tradeoff_metric(0.6, 1.0, **anchors) == 0.5
    _finish(8, 1.0, start, "all four clamp corners exact")
