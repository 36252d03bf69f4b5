"""Answer-level and reasoning-level feature extraction.

Three answer features (local/global consistency, parse error) compare the
current sample's answer against the history of prior answers for the same
question; seven reasoning features measure the quality of the rationale text
itself and its vocabulary overlap with the question and with prior rationales.
All text similarity is Jaccard over word-token sets, kept deliberately cheap:
no embeddings, no learned metrics.
"""
from __future__ import annotations

import re
import statistics
from dataclasses import dataclass
from typing import Callable, Iterable

from .types import Answer, FeatureVector, Question, Sample

# Phrases that mark a rationale admitting its own mistake. Matched
# case-insensitively as substrings; extend via FeatureConfig.
DEFAULT_ADMISSION_PHRASES: tuple[str, ...] = (
    "i made a mistake",
    "i apologize",
    "seems to be a mistake",
    "seemed to be a mistake",
    "i was wrong",
    "correction:",
    "not enough information",
)

_WORD = re.compile(r"[a-z0-9]+")
_STEP_MARKER = re.compile(r"step\s*\d+\s*:", re.IGNORECASE)
_SENTENCE_BREAK = re.compile(r"(?<=[.?!])\s+")


@dataclass(frozen=True)
class FeatureConfig:
    """Extractor options.

    token_normalizer is a reserved hook for stemming/lemmatizing tokens before
    set comparison; the default extractor is dependency-free and leaves tokens
    untouched.
    """

    admission_phrases: tuple[str, ...] = DEFAULT_ADMISSION_PHRASES
    token_normalizer: Callable[[str], str] | None = None


DEFAULT_FEATURE_CONFIG = FeatureConfig()


def word_tokens(text: str, config: FeatureConfig = DEFAULT_FEATURE_CONFIG) -> list[str]:
    """Lowercased alphanumeric runs, in order, duplicates kept."""
    tokens = _WORD.findall(text.lower())
    if config.token_normalizer is not None:
        tokens = [config.token_normalizer(t) for t in tokens]
    return tokens


def tokenize(text: str, config: FeatureConfig = DEFAULT_FEATURE_CONFIG) -> frozenset[str]:
    """The vocabulary of a text: the set of distinct word tokens."""
    return frozenset(word_tokens(text, config))


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """|a ∩ b| / |a ∪ b|, with 0.0 when both sets are empty."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 0.0
    inter = len(sa & sb)
    union = len(sa) + len(sb) - inter
    return inter / union


def split_steps(raw_text: str) -> list[str]:
    """Split a rationale into steps.

    Explicit "Step k:" markers win when present; otherwise sentences split at
    ./?/! followed by whitespace. Nonempty input always yields at least one
    step (the whole text as fallback); empty input yields one empty step.
    """
    if raw_text == "":
        return [""]
    starts = [m.start() for m in _STEP_MARKER.finditer(raw_text)]
    if starts:
        pieces: list[str] = []
        lead = raw_text[: starts[0]]
        if lead.strip():
            pieces.append(lead)
        for begin, end in zip(starts, starts[1:] + [len(raw_text)]):
            pieces.append(raw_text[begin:end])
        return pieces
    sentences = [p for p in _SENTENCE_BREAK.split(raw_text) if p.strip()]
    return sentences if sentences else [raw_text]


def detect_error_admission(
    raw_text: str, config: FeatureConfig = DEFAULT_FEATURE_CONFIG
) -> int:
    """1 iff the text contains any mistake-admission phrase (case-insensitive)."""
    lowered = raw_text.lower()
    return int(any(phrase in lowered for phrase in config.admission_phrases))


def make_sample(index: int, raw_text: str, answer: Answer) -> Sample:
    """Canonical Sample constructor: steps derived from the raw text."""
    return Sample(index=index, raw_text=raw_text, steps=tuple(split_steps(raw_text)), answer=answer)


class History:
    """Prior samples of one question, with vocabulary caches.

    Appending sample t costs O(tokens of t): the per-path vocabulary and the
    running union over all paths are maintained incrementally, so feature
    extraction over a whole stream is linear in total tokens. Single-writer:
    one History per question, never shared across questions.
    """

    def __init__(self, config: FeatureConfig = DEFAULT_FEATURE_CONFIG) -> None:
        self.config = config
        self.samples: list[Sample] = []
        self._path_vocabs: list[frozenset[str]] = []
        self._all_paths_vocab: set[str] = set()

    def __len__(self) -> int:
        return len(self.samples)

    def append(self, sample: Sample) -> None:
        if sample.index != len(self.samples) + 1:
            raise ValueError(
                f"history indices must be contiguous: got {sample.index}, expected {len(self.samples) + 1}"
            )
        vocab = tokenize(sample.raw_text, self.config)
        self.samples.append(sample)
        self._path_vocabs.append(vocab)
        self._all_paths_vocab |= vocab

    @classmethod
    def from_samples(
        cls, samples: Iterable[Sample], config: FeatureConfig = DEFAULT_FEATURE_CONFIG
    ) -> History:
        history = cls(config)
        for sample in samples:
            history.append(sample)
        return history

    @property
    def last_path_vocab(self) -> frozenset[str]:
        return self._path_vocabs[-1]

    @property
    def all_paths_vocab(self) -> frozenset[str]:
        return frozenset(self._all_paths_vocab)


def _check_is_next(current: Sample, history: History) -> None:
    if current.index != len(history) + 1:
        raise ValueError(
            f"sample index {current.index} does not follow a history of {len(history)} samples"
        )


def extract_answer_features(current: Sample, history: History) -> tuple[int, int, int]:
    """(local_consistency, global_consistency, parsing_error).

    Consistency compares canonical answers; parse errors match nothing, so a
    run of failures never looks consistent.
    """
    _check_is_next(current, history)
    answer = current.answer
    local = int(bool(history.samples) and answer.matches(history.samples[-1].answer))
    global_ = int(any(answer.matches(prior.answer) for prior in history.samples))
    return local, global_, int(answer.is_parse_error)


def extract_reasoning_features(
    question: Question,
    current: Sample,
    history: History,
    config: FeatureConfig = DEFAULT_FEATURE_CONFIG,
) -> tuple[int, int, float, float, int, float, float]:
    """(rp_length, num_of_steps, step_relevance, question_relevance,
    error_admitting, local_relevance, global_relevance).

    rp_length counts word tokens, not characters. step_relevance averages the
    Jaccard overlap of consecutive step pairs (0.0 for single-step
    rationales). The two history overlaps are 0.0 at t=1 by convention: no
    prior paths means no evidence of relevance.
    """
    _check_is_next(current, history)
    rp_length = len(word_tokens(current.raw_text, config))
    num_of_steps = len(current.steps)

    step_vocabs = [tokenize(step, config) for step in current.steps]
    if len(step_vocabs) >= 2:
        step_relevance = statistics.fmean(
            jaccard(prev, nxt) for prev, nxt in zip(step_vocabs, step_vocabs[1:])
        )
    else:
        step_relevance = 0.0

    path_vocab = tokenize(current.raw_text, config)
    question_relevance = jaccard(tokenize(question.prompt_text, config), path_vocab)
    error_admitting = detect_error_admission(current.raw_text, config)

    if len(history) == 0:
        local_relevance = 0.0
        global_relevance = 0.0
    else:
        local_relevance = jaccard(history.last_path_vocab, path_vocab)
        global_relevance = jaccard(history.all_paths_vocab, path_vocab)

    return (
        rp_length,
        num_of_steps,
        step_relevance,
        question_relevance,
        error_admitting,
        local_relevance,
        global_relevance,
    )


def extract_features(
    question: Question,
    current: Sample,
    history: History,
    config: FeatureConfig = DEFAULT_FEATURE_CONFIG,
) -> FeatureVector:
    """The full feature vector: answer-level components then reasoning-level."""
    lc, gc, pe = extract_answer_features(current, history)
    rp_len, steps, step_rel, q_rel, err, local_rel, global_rel = extract_reasoning_features(
        question, current, history, config
    )
    return FeatureVector(
        local_consistency=lc,
        global_consistency=gc,
        parsing_error=pe,
        rp_length=rp_len,
        num_of_steps=steps,
        step_relevance=step_rel,
        question_relevance=q_rel,
        error_admitting=err,
        local_relevance=local_rel,
        global_relevance=global_rel,
    )
