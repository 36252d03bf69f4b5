"""Sufficiency scoring: a logistic model over feature vectors.

The scorer maps a sample's 10 quality/consistency features to a probability
that the sample's answer is correct, trained on labeled (features, correct?)
pairs by minimizing mean binary cross-entropy with L2 weight decay via
full-batch gradient descent. Features are z-scored before the linear map; the
standardization statistics travel with the model so training and inference
always agree.

A "random_baseline" model kind ignores its input and emits seeded uniform
scores, giving the no-signal reference point for adaptive-stopping
comparisons.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .types import FEATURE_ORDER, N_FEATURES, FeatureVector


class ScorerConfigError(Exception):
    """Model is not usable as configured (bad arity, non-positive stds)."""


class TrainingError(Exception):
    """Training preconditions violated (too few examples, single class)."""


class TrainingDataError(Exception):
    """Non-finite feature values in the training set."""


class ModelFileError(Exception):
    """Model file is malformed or inconsistent with the feature layout."""


class ScorerKind(str, enum.Enum):
    LOGISTIC = "logistic"
    RANDOM_BASELINE = "random_baseline"


@dataclass(frozen=True)
class TrainingExample:
    features: FeatureVector
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ScorerModel:
    """A fitted scorer: linear weights plus the feature standardization stats.

    Immutable and shareable across threads for scoring, except that the
    random_baseline kind mutates its internal generator per draw and is
    therefore single-threaded by contract.
    """

    kind: ScorerKind
    weights: tuple[float, ...]
    bias: float
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    trained_on: int
    seed: int | None = None
    _rng: np.random.Generator | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("weights", "feature_means", "feature_stds"):
            if len(getattr(self, name)) != N_FEATURES:
                raise ScorerConfigError(
                    f"{name} has {len(getattr(self, name))} entries, expected {N_FEATURES}"
                )
        if any(s <= 0 for s in self.feature_stds):
            raise ScorerConfigError("feature_stds must be strictly positive")

    def standardize(self, v: FeatureVector) -> np.ndarray:
        raw = np.asarray(v.to_list(), dtype=np.float64)
        return (raw - np.asarray(self.feature_means)) / np.asarray(self.feature_stds)

    def score(self, v: FeatureVector) -> float:
        """Sufficiency score in [0, 1] for one feature vector."""
        if self.kind is ScorerKind.RANDOM_BASELINE:
            return float(self._generator().uniform())
        z = float(np.dot(np.asarray(self.weights), self.standardize(v)) + self.bias)
        return float(sigmoid(z))

    def _generator(self) -> np.random.Generator:
        if self._rng is None:
            object.__setattr__(self, "_rng", np.random.default_rng(self.seed))
        return self._rng


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy plus l2·||w||², with its analytic gradient.

    X is the (already standardized) design matrix, y the 0/1 labels.
    """
    p = sigmoid(X @ weights + bias)
    eps = 1e-12
    p_clipped = np.clip(p, eps, 1.0 - eps)
    bce = -np.mean(y * np.log(p_clipped) + (1.0 - y) * np.log(1.0 - p_clipped))
    loss = float(bce + l2 * np.dot(weights, weights))
    residual = p - y
    grad_w = X.T @ residual / len(y) + 2.0 * l2 * weights
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def _design_matrix(examples: list[TrainingExample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray([ex.features.to_list() for ex in examples], dtype=np.float64)
    y = np.asarray([ex.label for ex in examples], dtype=np.float64)
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        row, col = bad[0]
        raise TrainingDataError(
            f"non-finite value in feature {FEATURE_ORDER[col]!r} of training example {row}"
        )
    return X, y


def train_with_history(
    examples: list[TrainingExample], config: TrainConfig = TrainConfig()
) -> tuple[ScorerModel, list[float]]:
    """Fit a logistic scorer; also return the per-epoch loss trace.

    Deterministic given config.seed. Raises TrainingError when fewer than two
    examples or only one label class is present; raises TrainingDataError on
    non-finite features.
    """
    if len(examples) < 2:
        raise TrainingError("need at least two training examples")
    X, y = _design_matrix(examples)
    if len(set(y.tolist())) < 2:
        raise TrainingError("training set contains a single label class; need both 0 and 1")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0.0] = 1.0  # constant feature: zero-centered input contributes nothing
    Z = (X - means) / stds

    rng = np.random.default_rng(config.seed)
    weights = rng.normal(scale=0.01, size=N_FEATURES)
    bias = 0.0
    losses: list[float] = []
    for _ in range(config.epochs):
        loss, grad_w, grad_b = loss_and_gradient(weights, bias, Z, y, config.l2)
        losses.append(loss)
        weights = weights - config.learning_rate * grad_w
        bias = bias - config.learning_rate * grad_b
    losses.append(loss_and_gradient(weights, bias, Z, y, config.l2)[0])

    model = ScorerModel(
        kind=ScorerKind.LOGISTIC,
        weights=tuple(float(w) for w in weights),
        bias=float(bias),
        feature_means=tuple(float(m) for m in means),
        feature_stds=tuple(float(s) for s in stds),
        trained_on=len(examples),
    )
    return model, losses


def train(examples: list[TrainingExample], config: TrainConfig = TrainConfig()) -> ScorerModel:
    return train_with_history(examples, config)[0]


def random_baseline(seed: int = 0) -> ScorerModel:
    """A scorer that draws uniform scores from a seeded generator."""
    return ScorerModel(
        kind=ScorerKind.RANDOM_BASELINE,
        weights=(0.0,) * N_FEATURES,
        bias=0.0,
        feature_means=(0.0,) * N_FEATURES,
        feature_stds=(1.0,) * N_FEATURES,
        trained_on=0,
        seed=seed,
    )


def save_model(model: ScorerModel, path: str | Path) -> None:
    """Write the model as a single JSON document (lossless float round-trip)."""
    doc = {
        "kind": model.kind.value,
        "weights": list(model.weights),
        "bias": model.bias,
        "feature_means": list(model.feature_means),
        "feature_stds": list(model.feature_stds),
        "trained_on": model.trained_on,
        "feature_order": list(FEATURE_ORDER),
    }
    if model.seed is not None:
        doc["seed"] = model.seed
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ScorerModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"malformed model file {path}: {exc}") from exc
    try:
        kind = ScorerKind(doc["kind"])
        order = tuple(doc["feature_order"])
        weights = tuple(float(w) for w in doc["weights"])
        model = ScorerModel(
            kind=kind,
            weights=weights,
            bias=float(doc["bias"]),
            feature_means=tuple(float(m) for m in doc["feature_means"]),
            feature_stds=tuple(float(s) for s in doc["feature_stds"]),
            trained_on=int(doc["trained_on"]),
            seed=doc.get("seed"),
        )
    except ScorerConfigError as exc:
        raise ModelFileError(f"inconsistent model file {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"model file {path} is missing or mistypes fields: {exc}") from exc
    if order != FEATURE_ORDER:
        raise ModelFileError(
            f"model file {path} was fitted for feature order {order}, expected {FEATURE_ORDER}"
        )
    return model
