"""Metrics over per-question traces: accuracy, cost, and method comparisons.

Everything here is a pure function over loaded traces (or, for the sweep,
over a recorded sample store). The per-extra-sample accuracy gain and the
accuracy/cost trade-off score summarize each method against the
single-sample and fixed-budget anchors; paired comparisons put confidence
intervals on per-question differences between two methods.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .controller import buffer_admit, weighted_vote
from .features import DEFAULT_FEATURE_CONFIG, FeatureConfig, History, extract_features
from .generation import ReplayStore, StoreError
from .scorer import ScorerModel
from .traces import METHODS, TraceRecord
from .types import BufferEntry, Question, Sample

log = logging.getLogger(__name__)

COT_COST = 1.0  # a single-sample method costs exactly one generation


class EvaluationError(Exception):
    """Metric preconditions violated (empty inputs, degenerate anchors)."""


@dataclass(frozen=True)
class MethodReport:
    """One summary row per method, as written to the report CSV."""

    method: str
    n_questions: int
    accuracy: float
    avg_generations: float
    gain_per_sample: float | None = None
    tradeoff: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        if self.avg_generations < 1.0:
            raise ValueError("avg_generations must be at least 1")
        if self.n_questions < 1:
            raise ValueError("n_questions must be positive")


def accuracy_and_cost(traces: Sequence[TraceRecord]) -> tuple[float, float]:
    """(fraction correct, mean generations used) over a trace set."""
    if not traces:
        raise EvaluationError("cannot evaluate an empty trace set")
    correct = sum(1 for t in traces if t.correct)
    total_gens = sum(t.generations_used for t in traces)
    return correct / len(traces), total_gens / len(traces)


def gain_per_sample(acc: float, cot_acc: float, avg_gen: float) -> float:
    """Accuracy gained over the single-sample anchor, per extra generation.

    Unit-agnostic: feed percentage points to get points per sample. Undefined
    at avg_gen <= 1 (no extra samples to attribute gain to).
    """
    if avg_gen <= 1.0:
        raise EvaluationError("gain per sample is undefined at avg_gen <= 1")
    return (acc - cot_acc) / (avg_gen - 1.0)


def _clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def tradeoff_metric(
    acc: float,
    cost: float,
    sc_acc: float,
    sc_cost: float,
    single_sample_acc: float,
    direct_cost: float = COT_COST,
) -> float:
    """Mean of a clamped accuracy factor and a clamped cost factor, in [0,1].

    The accuracy factor measures where acc sits between the single-sample
    anchor (0) and the fixed-budget anchor (1); the cost factor measures
    where cost sits between the fixed budget (0) and a single draw (1). Both
    clamp, so beating an anchor saturates rather than extrapolating.
    """
    if sc_acc <= single_sample_acc:
        raise EvaluationError("trade-off anchors degenerate: sc_acc must exceed single_sample_acc")
    if sc_cost <= direct_cost:
        raise EvaluationError("trade-off anchors degenerate: sc_cost must exceed direct_cost")
    acc_factor = _clamp01((acc - single_sample_acc) / (sc_acc - single_sample_acc))
    cost_factor = _clamp01((sc_cost - cost) / (sc_cost - direct_cost))
    return 0.5 * acc_factor + 0.5 * cost_factor


def answer_entropy(counts: Mapping[object, int] | Sequence[int]) -> float:
    """Shannon entropy (nats) of the empirical answer distribution."""
    values = list(counts.values()) if isinstance(counts, Mapping) else list(counts)
    if any(c < 0 for c in values):
        raise EvaluationError("counts must be nonnegative")
    total = sum(values)
    if total == 0:
        raise EvaluationError("entropy of an empty distribution is undefined")
    entropy = 0.0
    for count in values:
        if count > 0:
            p = count / total
            entropy -= p * math.log(p)
    return entropy


@dataclass(frozen=True)
class PairedComparison:
    """Per-question paired difference a_i - b_i with a 95% normal CI.

    p_value is None when n < 30 and the differences vary (the normal
    approximation is not trusted there); zero-variance differences are exact,
    so they carry a p-value at any n.
    """

    mean_diff: float
    ci95_low: float
    ci95_high: float
    p_value: float | None
    n: int


def compare_methods(
    paired_outcomes_a: Sequence[float], paired_outcomes_b: Sequence[float]
) -> PairedComparison:
    """Paired-difference summary of two per-question outcome vectors."""
    if len(paired_outcomes_a) != len(paired_outcomes_b):
        raise EvaluationError(
            f"paired vectors differ in length: {len(paired_outcomes_a)} vs {len(paired_outcomes_b)}"
        )
    n = len(paired_outcomes_a)
    if n < 2:
        raise EvaluationError("need at least two pairs to compare")
    diffs = [a - b for a, b in zip(paired_outcomes_a, paired_outcomes_b)]
    mean = sum(diffs) / n
    variance = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(variance)

    if sd == 0.0:
        return PairedComparison(
            mean_diff=mean,
            ci95_low=mean,
            ci95_high=mean,
            p_value=1.0 if mean == 0.0 else 0.0,
            n=n,
        )

    half_width = 1.96 * sd / math.sqrt(n)
    p_value: float | None = None
    if n >= 30:
        z = mean / (sd / math.sqrt(n))
        p_value = math.erfc(abs(z) / math.sqrt(2.0))
    return PairedComparison(
        mean_diff=mean,
        ci95_low=mean - half_width,
        ci95_high=mean + half_width,
        p_value=p_value,
        n=n,
    )


# ---------------------------------------------------------------------------
# Threshold/capacity sweep over recorded streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    threshold_T: float
    capacity_N: int
    accuracy: float
    avg_generations: float


def score_stream(
    question: Question,
    samples: Sequence[Sample],
    scorer: ScorerModel,
    feature_config: FeatureConfig = DEFAULT_FEATURE_CONFIG,
) -> list[tuple[Sample, float]]:
    """Score every draw of one stream in order, as the live loop would.

    Features depend only on the draw prefix, never on admissions, so one
    scored stream serves every (threshold, capacity) cell.
    """
    history = History(feature_config)
    scored: list[tuple[Sample, float]] = []
    for sample in samples:
        features = extract_features(question, sample, history, feature_config)
        scored.append((sample, scorer.score(features)))
        history.append(sample)
    return scored


def simulate_stopping(
    scored: Sequence[tuple[Sample, float]],
    threshold_T: float,
    capacity_N: int,
    max_generations: int,
) -> tuple[Sample, int]:
    """Replay the admission loop over a pre-scored stream.

    Returns (winning rationale's sample carrier, generations used); the
    winning answer is the returned sample's answer. Matches run_question
    decision-for-decision on the same stream (property-tested).
    """
    buffer: list[BufferEntry] = []
    for drawn, (sample, score) in enumerate(scored[:max_generations], start=1):
        if buffer_admit(score, threshold_T):
            buffer.append(BufferEntry(sample=sample, score=score))
        if len(buffer) >= capacity_N:
            _, rationale = weighted_vote(buffer)
            return rationale, drawn
    drawn = min(len(scored), max_generations)
    entries = [BufferEntry(sample=s, score=sc) for s, sc in scored[:max_generations]]
    _, rationale = weighted_vote(entries)
    return rationale, drawn


def sweep_T_N(
    questions: Sequence[Question],
    store: ReplayStore,
    scorer: ScorerModel,
    T_grid: Sequence[float],
    N_grid: Sequence[int],
    max_generations: int = 40,
    feature_config: FeatureConfig = DEFAULT_FEATURE_CONFIG,
) -> list[SweepCell]:
    """Accuracy/cost grid from re-running the stopping rule offline.

    Every (T, N) cell replays the same recorded streams, so cells are
    comparable draw-for-draw. Streams must cover max_generations draws: the
    T=1 worst case consumes all of them.
    """
    if not questions:
        raise EvaluationError("cannot sweep an empty dataset")
    if not T_grid or not N_grid:
        raise EvaluationError("sweep grids must be nonempty")
    if max(N_grid) > max_generations:
        raise EvaluationError("every N in the grid must be at most max_generations")

    cursor = store.cursor()
    scored_streams: dict[str, list[tuple[Sample, float]]] = {}
    for question in questions:
        available = store.draws_for(question.id)
        if available < max_generations:
            raise StoreError(
                f"question {question.id!r} has {available} recorded draws; "
                f"the sweep needs {max_generations}"
            )
        samples = [cursor.replay_next(question.id) for _ in range(max_generations)]
        scored_streams[question.id] = score_stream(question, samples, scorer, feature_config)

    cells: list[SweepCell] = []
    for T, N in product(T_grid, N_grid):
        correct = 0
        total_gens = 0
        for question in questions:
            rationale, drawn = simulate_stopping(
                scored_streams[question.id], T, N, max_generations
            )
            correct += int(rationale.answer.matches(question.gold_answer))
            total_gens += drawn
        cells.append(
            SweepCell(
                threshold_T=T,
                capacity_N=N,
                accuracy=correct / len(questions),
                avg_generations=total_gens / len(questions),
            )
        )
    return cells


# ---------------------------------------------------------------------------
# Report assembly and CSV output
# ---------------------------------------------------------------------------


def build_reports(traces_by_method: Mapping[str, Sequence[TraceRecord]]) -> list[MethodReport]:
    """One MethodReport per method, anchored on cot/sc rows when present.

    Gain per sample needs a cot row (and more than one generation on
    average); the trade-off score needs both cot and sc rows with
    non-degenerate anchors. Absent anchors leave those columns empty, with a
    warning, rather than failing the whole report.
    """
    summaries = {
        method: accuracy_and_cost(traces) for method, traces in traces_by_method.items()
    }

    cot = summaries.get("cot")
    if cot is None:
        log.warning("no cot traces given; gain-per-sample column will be empty")
    sc = summaries.get("sc")
    if sc is None or cot is None:
        log.warning("need both cot and sc traces for the trade-off column")

    reports: list[MethodReport] = []
    ordered = [m for m in METHODS if m in traces_by_method]
    ordered += [m for m in traces_by_method if m not in METHODS]
    for method in ordered:
        acc, avg_gen = summaries[method]
        gain: float | None = None
        if cot is not None and avg_gen > 1.0:
            gain = gain_per_sample(acc, cot[0], avg_gen)
        tradeoff: float | None = None
        if cot is not None and sc is not None:
            try:
                tradeoff = tradeoff_metric(acc, avg_gen, sc[0], sc[1], cot[0], cot[1])
            except EvaluationError as exc:
                log.warning("trade-off column skipped for %s: %s", method, exc)
        reports.append(
            MethodReport(
                method=method,
                n_questions=len(traces_by_method[method]),
                accuracy=acc,
                avg_generations=avg_gen,
                gain_per_sample=gain,
                tradeoff=tradeoff,
            )
        )
    return reports


_REPORT_COLUMNS = ("method", "n_questions", "accuracy", "avg_generations",
                   "gain_per_sample", "tradeoff")


def _cell(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report_csv(path: str | Path, reports: Sequence[MethodReport]) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_COLUMNS)
        for report in reports:
            writer.writerow(
                [
                    report.method,
                    _cell(report.n_questions),
                    _cell(report.accuracy),
                    _cell(report.avg_generations),
                    _cell(report.gain_per_sample),
                    _cell(report.tradeoff),
                ]
            )


def write_sweep_csv(path: str | Path, cells: Iterable[SweepCell]) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("T", "N", "accuracy", "avg_generations"))
        for cell in cells:
            writer.writerow(
                [
                    _cell(cell.threshold_T),
                    _cell(cell.capacity_N),
                    _cell(cell.accuracy),
                    _cell(cell.avg_generations),
                ]
            )
