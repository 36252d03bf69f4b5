"""Adaptive early stopping for self-consistency LLM reasoning.

Draws reasoning samples one at a time, scores each for sufficiency with a
learned logistic model over cheap text features, and stops as soon as a
small buffer of high-scoring samples is full; the answer is a score-weighted
majority vote. Ships the fixed-budget and heuristic early-stopping baselines
it is benchmarked against, a replay-first generation layer, and an
evaluation suite over per-question traces.
"""
from __future__ import annotations

from .baselines import beta_stop_probability, majority_vote, run_ac, run_esc, run_sc
from .controller import RascConfig, RunError, buffer_admit, run_question, weighted_vote
from .features import (
    DEFAULT_FEATURE_CONFIG,
    FeatureConfig,
    History,
    extract_features,
    jaccard,
    make_sample,
    split_steps,
)
from .generation import (
    GenerationParams,
    ReplayStore,
    SampleRecord,
    Sampler,
    SamplerExhausted,
    build_prompt,
    canonical_answer,
    parse_answer,
    record_samples,
)
from .scorer import ScorerModel, TrainConfig, TrainingExample, load_model, save_model, train
from .traces import TraceRecord, read_traces, write_traces
from .types import (
    FEATURE_ORDER,
    Answer,
    AnswerKind,
    BufferEntry,
    FeatureVector,
    Question,
    RunDecision,
    Sample,
    StopReason,
)

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AnswerKind",
    "BufferEntry",
    "DEFAULT_FEATURE_CONFIG",
    "FEATURE_ORDER",
    "FeatureConfig",
    "FeatureVector",
    "GenerationParams",
    "History",
    "Question",
    "RascConfig",
    "ReplayStore",
    "RunDecision",
    "RunError",
    "Sample",
    "SampleRecord",
    "Sampler",
    "SamplerExhausted",
    "ScorerModel",
    "StopReason",
    "TraceRecord",
    "TrainConfig",
    "TrainingExample",
    "beta_stop_probability",
    "buffer_admit",
    "build_prompt",
    "canonical_answer",
    "extract_features",
    "jaccard",
    "load_model",
    "majority_vote",
    "make_sample",
    "parse_answer",
    "read_traces",
    "record_samples",
    "run_ac",
    "run_esc",
    "run_question",
    "run_sc",
    "save_model",
    "split_steps",
    "train",
    "weighted_vote",
    "write_traces",
]
