"""Adaptive early-stopping engine: score each draw, buffer the good ones, vote.

The engine draws reasoning samples one at a time, scores each against the
accumulated history with the sufficiency scorer, and admits those scoring at
or above a threshold into a fixed-capacity buffer. Generation stops as soon
as the buffer fills; the final answer is a score-weighted majority vote over
the buffered samples. A hard generation cap bounds the worst case, falling
back to a weighted vote over everything drawn.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .features import DEFAULT_FEATURE_CONFIG, FeatureConfig, History, extract_features
from .generation import GenerationError, Sampler, SamplerExhausted
from .scorer import ScorerModel
from .types import (
    Answer,
    BufferEntry,
    Question,
    RunDecision,
    Sample,
    SampleEvaluation,
    StopReason,
)

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD_T = 0.5
DEFAULT_CAPACITY_N = 5
DEFAULT_MAX_GENERATIONS = 40


class RunError(Exception):
    """A run aborted mid-stream; carries the evaluations completed so far."""

    def __init__(self, message: str, per_sample: Sequence[SampleEvaluation] = ()) -> None:
        super().__init__(message)
        self.per_sample = tuple(per_sample)


@dataclass(frozen=True)
class RascConfig:
    """Stopping-policy knobs: score threshold, buffer size, generation cap."""

    threshold_T: float = DEFAULT_THRESHOLD_T
    capacity_N: int = DEFAULT_CAPACITY_N
    max_generations: int = DEFAULT_MAX_GENERATIONS

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold_T <= 1.0:
            raise ValueError("threshold_T must lie in [0, 1]")
        if self.capacity_N < 1:
            raise ValueError("capacity_N must be at least 1")
        if self.max_generations < self.capacity_N:
            raise ValueError("max_generations must be at least capacity_N")


def buffer_admit(score: float, threshold: float) -> bool:
    """Admission rule; the threshold itself is admitted (>=, not >)."""
    return score >= threshold


def weighted_vote(entries: Sequence[BufferEntry]) -> tuple[Answer, Sample]:
    """Score-weighted majority: the answer with the largest total score wins.

    Returns (final answer, best rationale) where the rationale is the
    highest-scoring entry carrying the winning answer. Parse errors never
    become candidates while any parseable answer exists; a buffer of only
    errors yields its single best entry so the caller still gets a ruling.
    All ties break toward the earliest admission, which makes the vote
    deterministic for a fixed entry order.
    """
    if not entries:
        raise ValueError("cannot vote over an empty buffer")

    candidates = [e for e in entries if not e.sample.answer.is_parse_error]
    if not candidates:
        best = entries[0]
        for entry in entries[1:]:
            if entry.score > best.score:
                best = entry
        return best.sample.answer, best.sample

    # accumulate in admission order so exact float ties resolve to the
    # answer admitted first
    totals: dict[tuple[str, str], float] = {}
    for entry in candidates:
        key = entry.sample.answer.vote_key()
        assert key is not None
        totals[key] = totals.get(key, 0.0) + entry.score

    winning_key = None
    winning_total = float("-inf")
    for key, total in totals.items():  # dict order == first-admission order
        if total > winning_total:
            winning_key, winning_total = key, total

    best = None
    for entry in candidates:
        if entry.sample.answer.vote_key() != winning_key:
            continue
        if best is None or entry.score > best.score:
            best = entry
    assert best is not None
    return best.sample.answer, best.sample


def run_question(
    question: Question,
    sampler: Sampler,
    scorer: ScorerModel,
    config: RascConfig = RascConfig(),
    feature_config: FeatureConfig = DEFAULT_FEATURE_CONFIG,
) -> RunDecision:
    """Run the adaptive loop on one question until the buffer fills or the cap.

    Every draw enters the feature-extraction history whether or not it is
    admitted; admission filters the vote, not the evidence. If the buffer
    fills, the vote runs over the buffer (stop_reason buffer_full). If the
    cap is hit first, the vote runs over ALL drawn samples with their scores
    (budget_exhausted), so low scorers still resolve the question.

    Sampler exhaustion or a generation failure raises RunError carrying the
    per-sample trace completed before the failure.
    """
    history = History(feature_config)
    buffer: list[BufferEntry] = []
    per_sample: list[SampleEvaluation] = []

    for _ in range(config.max_generations):
        try:
            sample = sampler.next_sample(question)
        except (SamplerExhausted, GenerationError) as exc:
            raise RunError(
                f"question {question.id}: sampler failed after "
                f"{len(per_sample)} draws: {exc}",
                per_sample,
            ) from exc
        features = extract_features(question, sample, history, feature_config)
        score = scorer.score(features)
        admitted = buffer_admit(score, config.threshold_T)
        history.append(sample)
        per_sample.append(
            SampleEvaluation(sample=sample, features=features, score=score, admitted=admitted)
        )
        if admitted:
            buffer.append(BufferEntry(sample=sample, score=score))
        if len(buffer) >= config.capacity_N:
            answer, rationale = weighted_vote(buffer)
            return RunDecision(
                final_answer=answer,
                best_rationale=rationale,
                generations_used=len(per_sample),
                stop_reason=StopReason.BUFFER_FULL,
                per_sample=tuple(per_sample),
            )

    log.debug(
        "question %s: cap of %d generations reached with %d admitted",
        question.id,
        config.max_generations,
        len(buffer),
    )
    all_entries = [BufferEntry(sample=ev.sample, score=ev.score) for ev in per_sample]
    answer, rationale = weighted_vote(all_entries)
    return RunDecision(
        final_answer=answer,
        best_rationale=rationale,
        generations_used=len(per_sample),
        stop_reason=StopReason.BUDGET_EXHAUSTED,
        per_sample=tuple(per_sample),
    )
