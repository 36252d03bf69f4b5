"""Fixed-budget and heuristic early-stopping baselines.

Three reference policies share the Sampler protocol with the adaptive
engine: plain self-consistency (a fixed draw budget; a budget of one is
chain-of-thought), window-agreement early stopping, and a sequential
Beta-posterior confidence test on the leading answer. All of them vote over
every drawn sample with equal weight.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from scipy.special import betainc

from .controller import RunError
from .generation import GenerationError, Sampler, SamplerExhausted
from .types import (
    Answer,
    Question,
    RunDecision,
    Sample,
    SampleEvaluation,
    StopReason,
)

log = logging.getLogger(__name__)

DEFAULT_SC_SAMPLES = 40
DEFAULT_ESC_WINDOW = 5
DEFAULT_ESC_MAX = 40
DEFAULT_AC_CONFIDENCE = 0.95
DEFAULT_AC_MAX = 40


@dataclass(frozen=True)
class BaselineConfig:
    """Budgets for the three baselines, as one bundle for the CLI."""

    sc_samples: int = DEFAULT_SC_SAMPLES
    esc_window: int = DEFAULT_ESC_WINDOW
    esc_max: int = DEFAULT_ESC_MAX
    ac_confidence: float = DEFAULT_AC_CONFIDENCE
    ac_max: int = DEFAULT_AC_MAX

    def __post_init__(self) -> None:
        if self.sc_samples < 1:
            raise ValueError("sc_samples must be at least 1")
        if self.esc_window < 1:
            raise ValueError("esc_window must be at least 1")
        if self.esc_max < self.esc_window or self.esc_max % self.esc_window != 0:
            raise ValueError("esc_max must be a positive multiple of esc_window")
        if not 0.5 < self.ac_confidence < 1.0:
            raise ValueError("ac_confidence must lie in (0.5, 1)")
        if self.ac_max < 2:
            raise ValueError("ac_max must be at least 2")


def majority_vote(answers: Sequence[Answer]) -> Answer:
    """Most frequent canonical answer; ties break toward first appearance.

    Parse errors are never candidates while any parseable answer exists (a
    sweep of failures must not outvote a real answer); an all-error input
    returns the first entry, still flagged as an error.
    """
    if not answers:
        raise ValueError("cannot vote over an empty answer list")

    candidates = [a for a in answers if not a.is_parse_error]
    if not candidates:
        return answers[0]

    counts: dict[tuple[str, str], int] = {}
    first_with: dict[tuple[str, str], Answer] = {}
    for answer in candidates:
        key = answer.vote_key()
        assert key is not None
        counts[key] = counts.get(key, 0) + 1
        first_with.setdefault(key, answer)

    winning_key = None
    winning_count = 0
    for key, count in counts.items():  # dict order == first-appearance order
        if count > winning_count:
            winning_key, winning_count = key, count
    assert winning_key is not None
    return first_with[winning_key]


def _vote_with_rationale(samples: Sequence[Sample]) -> tuple[Answer, Sample]:
    """Majority answer plus the first sample that produced it."""
    winner = majority_vote([s.answer for s in samples])
    for sample in samples:
        if sample.answer.matches(winner) or (winner.is_parse_error and sample.answer.is_parse_error):
            return winner, sample
    return winner, samples[0]


def _draw(
    question: Question, sampler: Sampler, per_sample: list[SampleEvaluation]
) -> Sample:
    try:
        sample = sampler.next_sample(question)
    except (SamplerExhausted, GenerationError) as exc:
        raise RunError(
            f"question {question.id}: sampler failed after {len(per_sample)} draws: {exc}",
            per_sample,
        ) from exc
    per_sample.append(SampleEvaluation(sample=sample, admitted=True))
    return sample


def _decision(per_sample: list[SampleEvaluation], stop_reason: StopReason) -> RunDecision:
    answer, rationale = _vote_with_rationale([ev.sample for ev in per_sample])
    return RunDecision(
        final_answer=answer,
        best_rationale=rationale,
        generations_used=len(per_sample),
        stop_reason=stop_reason,
        per_sample=tuple(per_sample),
    )


def run_sc(question: Question, sampler: Sampler, k: int = DEFAULT_SC_SAMPLES) -> RunDecision:
    """Self-consistency: draw exactly k samples and take the majority.

    k=1 degenerates to single-path chain-of-thought (the sole sample wins).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    per_sample: list[SampleEvaluation] = []
    for _ in range(k):
        _draw(question, sampler, per_sample)
    return _decision(per_sample, StopReason.BUDGET_EXHAUSTED)


def _window_agrees(window: Sequence[Sample]) -> bool:
    first = window[0].answer
    # matches() is False for parse errors, so an error-bearing window never agrees
    return not first.is_parse_error and all(
        first.matches(sample.answer) for sample in window[1:]
    )


def run_esc(
    question: Question,
    sampler: Sampler,
    window: int = DEFAULT_ESC_WINDOW,
    max_draws: int = DEFAULT_ESC_MAX,
) -> RunDecision:
    """Early-stopping self-consistency: stop when a whole window agrees.

    Draws in consecutive windows of the given size; after each full window,
    if every answer in that window is identical and parseable, stop. The
    vote always runs over all drawn samples, not just the last window.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if max_draws < window or max_draws % window != 0:
        raise ValueError("max_draws must be a positive multiple of window")
    per_sample: list[SampleEvaluation] = []
    while len(per_sample) < max_draws:
        drawn = [_draw(question, sampler, per_sample) for _ in range(window)]
        if _window_agrees(drawn):
            return _decision(per_sample, StopReason.CRITERION_MET)
    return _decision(per_sample, StopReason.BUDGET_EXHAUSTED)


def beta_stop_probability(lead_count: int, runner_up_count: int) -> float:
    """P(the leader's true rate exceeds one half) under a flat Beta prior.

    With counts a and b this is 1 - I_0.5(a+1, b+1), I being the regularized
    incomplete beta function. Four straight identical draws reach
    1 - 0.5^5 = 0.96875, crossing a 0.95 bar.
    """
    if lead_count < 0 or runner_up_count < 0:
        raise ValueError("counts must be nonnegative")
    return float(1.0 - betainc(lead_count + 1, runner_up_count + 1, 0.5))


def _leader_counts(samples: Sequence[Sample]) -> tuple[int, int]:
    counts: dict[tuple[str, str], int] = {}
    for sample in samples:
        key = sample.answer.vote_key()
        if key is None:
            continue
        counts[key] = counts.get(key, 0) + 1
    if not counts:
        return 0, 0
    ranked = sorted(counts.values(), reverse=True)
    return ranked[0], (ranked[1] if len(ranked) > 1 else 0)


def run_ac(
    question: Question,
    sampler: Sampler,
    confidence: float = DEFAULT_AC_CONFIDENCE,
    max_draws: int = DEFAULT_AC_MAX,
) -> RunDecision:
    """Adaptive-consistency: a sequential confidence test on the leader.

    From the second draw onward, stop as soon as the Beta-posterior
    probability that the current leading answer beats the runner-up reaches
    the confidence bar. Parse errors never count toward a leader.
    """
    if not 0.0 < confidence <= 1.0:
        raise ValueError("confidence must lie in (0, 1]")
    if max_draws < 2:
        raise ValueError("max_draws must be at least 2")
    per_sample: list[SampleEvaluation] = []
    while len(per_sample) < max_draws:
        _draw(question, sampler, per_sample)
        if len(per_sample) < 2:
            continue
        lead, runner_up = _leader_counts([ev.sample for ev in per_sample])
        if lead == 0:
            continue
        if beta_stop_probability(lead, runner_up) >= confidence:
            log.debug(
                "question %s: confident after %d draws", question.id, len(per_sample)
            )
            return _decision(per_sample, StopReason.CRITERION_MET)
    return _decision(per_sample, StopReason.BUDGET_EXHAUSTED)
