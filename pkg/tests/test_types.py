"""Core domain types: answer matching, vote keys, validation guards."""
from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import err, mc, numeric, question, sample
from rasc.types import (
    FEATURE_ORDER,
    N_FEATURES,
    Answer,
    AnswerKind,
    BufferEntry,
    FeatureVector,
    Question,
    RunDecision,
    Sample,
    SampleEvaluation,
    StopReason,
)


def test_feature_order_is_ten_features():
    assert N_FEATURES == 10
    assert FEATURE_ORDER == (
        "local_consistency",
        "global_consistency",
        "parsing_error",
        "rp_length",
        "num_of_steps",
        "step_relevance",
        "question_relevance",
        "error_admitting",
        "local_relevance",
        "global_relevance",
    )


def test_answer_matches_same_value():
    assert numeric("4").matches(numeric("4"))
    assert not numeric("4").matches(numeric("5"))


def test_answer_matches_is_kind_sensitive():
    four = numeric("4")
    assert not four.matches(Answer(kind=AnswerKind.FREE_TEXT, value="4"))


def test_parse_errors_match_nothing_including_each_other():
    assert not err().matches(err())
    assert not err().matches(numeric("4"))
    assert not numeric("4").matches(err())


def test_parse_error_carries_sentinel():
    assert err().value == "ERROR"
    with pytest.raises(ValueError):
        Answer(kind=AnswerKind.NUMERIC, value="4", is_parse_error=True)


def test_vote_key_none_for_errors():
    assert err().vote_key() is None
    assert numeric("4").vote_key() == ("numeric", "4")


def test_question_requires_nonempty_id():
    with pytest.raises(ValueError):
        Question(id="", prompt_text="x", answer_kind=AnswerKind.NUMERIC)


def test_question_gold_kind_must_match():
    with pytest.raises(ValueError):
        Question(
            id="q",
            prompt_text="x",
            answer_kind=AnswerKind.NUMERIC,
            gold_answer=mc("A"),
        )


def test_sample_index_is_one_based():
    with pytest.raises(ValueError):
        Sample(index=0, raw_text="x", steps=("x",), answer=numeric("1"))


def test_feature_vector_validates_flags_and_ranges():
    with pytest.raises(ValueError):
        FeatureVector(2, 0, 0, 3, 1, 0.0, 0.0, 0, 0.0, 0.0)
    with pytest.raises(ValueError):
        FeatureVector(0, 0, 0, 3, 1, 1.5, 0.0, 0, 0.0, 0.0)
    with pytest.raises(ValueError):
        FeatureVector(0, 0, 0, 3, 0, 0.0, 0.0, 0, 0.0, 0.0)  # zero steps


def test_feature_vector_round_trips_through_list():
    v = FeatureVector(1, 0, 0, 7, 2, 0.25, 0.5, 1, 0.0, 1.0)
    assert FeatureVector.from_list(v.to_list()) == v
    assert len(v.to_list()) == N_FEATURES


@given(st.lists(st.floats(min_value=0, max_value=1), min_size=9, max_size=9))
def test_feature_vector_from_list_rejects_wrong_arity(values):
    with pytest.raises(ValueError):
        FeatureVector.from_list(values)


def test_buffer_entry_score_bounds():
    s = sample(1, numeric("4"))
    with pytest.raises(ValueError):
        BufferEntry(sample=s, score=1.5)
    BufferEntry(sample=s, score=1.0)


def test_run_decision_counts_must_agree():
    s = sample(1, numeric("4"))
    ev = SampleEvaluation(sample=s, admitted=True)
    with pytest.raises(ValueError):
        RunDecision(
            final_answer=numeric("4"),
            best_rationale=s,
            generations_used=2,
            stop_reason=StopReason.BUFFER_FULL,
            per_sample=(ev,),
        )


def test_stop_reason_values_are_stable():
    assert StopReason.BUFFER_FULL.value == "buffer_full"
    assert StopReason.BUDGET_EXHAUSTED.value == "budget_exhausted"
    assert StopReason.CRITERION_MET.value == "criterion_met"
