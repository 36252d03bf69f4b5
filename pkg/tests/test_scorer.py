"""Sufficiency scorer: gradient correctness, training behavior, persistence.

The analytic gradient is checked against central finite differences (the
oracle is independent of the implementation: it calls only the loss). The
separable-training and monotone-loss checks mirror the acceptance gate at
smaller scale.
"""
from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rasc.scorer import (
    ModelFileError,
    ScorerKind,
    ScorerModel,
    TrainConfig,
    TrainingDataError,
    TrainingError,
    TrainingExample,
    load_model,
    loss_and_gradient,
    random_baseline,
    save_model,
    sigmoid,
    train,
    train_with_history,
)
from rasc.types import FEATURE_ORDER, N_FEATURES, FeatureVector


def _vector(flag: int, ratio: float, length: int = 10) -> FeatureVector:
    return FeatureVector(
        local_consistency=flag,
        global_consistency=flag,
        parsing_error=1 - flag,
        rp_length=length,
        num_of_steps=2,
        step_relevance=ratio,
        question_relevance=ratio,
        error_admitting=1 - flag,
        local_relevance=ratio,
        global_relevance=ratio,
    )


def _separable_examples(n: int, rng: np.random.Generator) -> list[TrainingExample]:
    examples = []
    for _ in range(n // 2):
        examples.append(TrainingExample(_vector(1, float(rng.uniform(0.7, 1.0))), 1))
        examples.append(TrainingExample(_vector(0, float(rng.uniform(0.0, 0.3))), 0))
    return examples


# ---------------------------------------------------------------------------
# sigmoid and gradient
# ---------------------------------------------------------------------------


def test_sigmoid_is_stable_at_extremes():
    assert sigmoid(1000.0) == pytest.approx(1.0)
    assert sigmoid(-1000.0) == pytest.approx(0.0)
    assert sigmoid(0.0) == pytest.approx(0.5)


def test_gradient_matches_central_finite_differences():
    rng = np.random.default_rng(7)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        X = rng.normal(size=(8, N_FEATURES))
        y = rng.integers(0, 2, size=8).astype(np.float64)
        weights = rng.normal(size=N_FEATURES)
        bias = float(rng.normal())
        l2 = float(rng.uniform(0, 1e-2))

        _, grad_w, grad_b = loss_and_gradient(weights, bias, X, y, l2)

        for i in range(N_FEATURES):
            bump = np.zeros(N_FEATURES)
            bump[i] = h
            up = loss_and_gradient(weights + bump, bias, X, y, l2)[0]
            down = loss_and_gradient(weights - bump, bias, X, y, l2)[0]
            worst = max(worst, abs((up - down) / (2 * h) - grad_w[i]))
        up = loss_and_gradient(weights, bias + h, X, y, l2)[0]
        down = loss_and_gradient(weights, bias - h, X, y, l2)[0]
        worst = max(worst, abs((up - down) / (2 * h) - grad_b))
    assert worst < 1e-5


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def test_training_reaches_high_accuracy_on_separable_data():
    rng = np.random.default_rng(11)
    examples = _separable_examples(200, rng)
    model = train(examples)
    hits = sum(1 for ex in examples if (model.score(ex.features) >= 0.5) == bool(ex.label))
    assert hits / len(examples) >= 0.99


def test_training_loss_is_monotone_non_increasing():
    rng = np.random.default_rng(13)
    examples = _separable_examples(100, rng)
    _, losses = train_with_history(examples, TrainConfig(learning_rate=0.1))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_training_is_deterministic_given_seed():
    rng = np.random.default_rng(17)
    examples = _separable_examples(60, rng)
    a = train(examples, TrainConfig(seed=3))
    b = train(examples, TrainConfig(seed=3))
    assert a == b
    c = train(examples, TrainConfig(seed=4))
    assert c != a


def test_training_rejects_single_class():
    examples = [TrainingExample(_vector(1, 0.9), 1) for _ in range(10)]
    with pytest.raises(TrainingError):
        train(examples)


def test_training_rejects_too_few_examples():
    with pytest.raises(TrainingError):
        train([TrainingExample(_vector(1, 0.9), 1)])


def test_training_names_non_finite_feature():
    # the constructor rejects NaN ratios, so smuggle one past the frozen
    # dataclass to simulate corrupted upstream data
    good = _vector(1, 0.9)
    bad = _vector(0, 0.0)
    object.__setattr__(bad, "step_relevance", float("nan"))
    with pytest.raises(TrainingDataError, match="step_relevance"):
        train([TrainingExample(good, 1), TrainingExample(bad, 0)])


def test_feature_vector_rejects_nan_ratio_directly():
    with pytest.raises(ValueError):
        _vector(0, float("nan"))


def test_constant_feature_does_not_blow_up_standardization():
    # num_of_steps is 2 everywhere in these examples: std would be zero
    rng = np.random.default_rng(19)
    examples = _separable_examples(40, rng)
    model = train(examples)
    assert all(s > 0 for s in model.feature_stds)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


ratios = st.floats(min_value=0.0, max_value=1.0)
flags = st.integers(min_value=0, max_value=1)

_model_cache: dict[str, ScorerModel] = {}


def _trained_model() -> ScorerModel:
    if "model" not in _model_cache:
        _model_cache["model"] = train(_separable_examples(40, np.random.default_rng(23)))
    return _model_cache["model"]


@given(flags, ratios, st.integers(min_value=0, max_value=500))
def test_scores_lie_in_unit_interval(flag, ratio, length):
    model = _trained_model()
    assert 0.0 <= model.score(_vector(flag, ratio, length)) <= 1.0


def test_random_baseline_is_seeded_and_ignores_features():
    a = random_baseline(seed=5)
    b = random_baseline(seed=5)
    seq_a = [a.score(_vector(1, 0.5)) for _ in range(5)]
    seq_b = [b.score(_vector(0, 0.1)) for _ in range(5)]
    assert seq_a == seq_b
    assert all(0.0 <= s <= 1.0 for s in seq_a)
    assert len(set(seq_a)) > 1


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def test_model_round_trips_through_file(tmp_path):
    rng = np.random.default_rng(29)
    model = train(_separable_examples(60, rng))
    path = tmp_path / "model.json"
    save_model(model, path)
    assert load_model(path) == model


def test_model_file_is_byte_deterministic(tmp_path):
    rng = np.random.default_rng(31)
    examples = _separable_examples(60, rng)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(train(examples, TrainConfig(seed=2)), p1)
    save_model(train(examples, TrainConfig(seed=2)), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_model_file_records_feature_order(tmp_path):
    model = random_baseline(seed=1)
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    assert doc["feature_order"] == list(FEATURE_ORDER)
    assert doc["kind"] == "random_baseline"
    assert doc["seed"] == 1


def test_load_model_rejects_malformed_json(tmp_path):
    path = tmp_path / "model.json"
    path.write_text("{not json")
    with pytest.raises(ModelFileError):
        load_model(path)


def test_load_model_rejects_foreign_feature_order(tmp_path):
    model = random_baseline(seed=1)
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["feature_order"] = list(reversed(doc["feature_order"]))
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFileError, match="feature order"):
        load_model(path)


def test_load_model_rejects_wrong_arity(tmp_path):
    model = random_baseline(seed=1)
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["weights"] = doc["weights"][:-1]
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFileError):
        load_model(path)


def test_scorer_model_rejects_nonpositive_stds():
    with pytest.raises(Exception):
        ScorerModel(
            kind=ScorerKind.LOGISTIC,
            weights=(0.0,) * N_FEATURES,
            bias=0.0,
            feature_means=(0.0,) * N_FEATURES,
            feature_stds=(0.0,) * N_FEATURES,
            trained_on=4,
        )
