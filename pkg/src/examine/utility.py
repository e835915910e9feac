"""Deterministic logistic-regression utility used by the supervised baselines.

Every valuation baseline and every accuracy curve retrains this model,
so it is built for bit-reproducibility: zero-initialized weights, a
fixed full-batch gradient-descent iteration count, no early stopping,
and a canonical row order (ids ascending) so the utility of a training
subset does not depend on how the subset was assembled.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import FeatureMatrix


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    iterations: int = 500
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.iterations <= 0:
            raise ValidationError("iterations must be positive")
        if self.l2 < 0:
            raise ValidationError("l2 must be nonnegative")

    def digest(self) -> str:
        blob = f"{self.learning_rate!r}|{self.iterations}|{self.l2!r}|{self.seed}".encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(eq=False)
class LabeledSet:
    """Feature matrix plus integer class labels in ``{0..n_classes-1}``."""

    features: FeatureMatrix
    labels: np.ndarray
    n_classes: int

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.features.n,):
            raise ValidationError(
                f"got {self.labels.shape} labels for {self.features.n} rows"
            )
        if self.n_classes < 2:
            raise ValidationError("need at least 2 classes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValidationError("labels must lie in [0, n_classes)")

    @property
    def n(self) -> int:
        return self.features.n

    @property
    def dim(self) -> int:
        return self.features.dim

    def subset(self, indices: Sequence[int]) -> "LabeledSet":
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size == 0:
            raise ValidationError("subset must keep at least one row; use utility_value(None, ...)")
        if idx.min() < 0 or idx.max() >= self.n:
            raise ValidationError("subset index out of range")
        ids = [self.features.ids[i] for i in idx]
        return LabeledSet(
            FeatureMatrix(ids, self.features.data[idx]),
            self.labels[idx],
            self.n_classes,
        )


@dataclass(eq=False)
class LogisticModel:
    """Weight matrix of shape (n_classes, dim + 1); last column is the bias."""

    weights: np.ndarray = field(repr=False)
    train_config_digest: str = ""

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1


def _augment(data: np.ndarray) -> np.ndarray:
    return np.hstack([data, np.ones((data.shape[0], 1))])


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def _loss(weights: np.ndarray, x_aug: np.ndarray, labels: np.ndarray, l2: float) -> float:
    logits = x_aug @ weights.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    nll = -float(log_probs[np.arange(len(labels)), labels].mean())
    penalty = 0.5 * l2 * float((weights[:, :-1] ** 2).sum())
    return nll + penalty


def train(
    train_set: LabeledSet,
    cfg: TrainConfig,
    loss_history: list[float] | None = None,
) -> LogisticModel:
    """Full-batch gradient descent on L2-regularized softmax cross-entropy.

    Weights start at zero and exactly ``cfg.iterations`` steps are taken;
    the bias column is not regularized.  Pass ``loss_history`` to collect
    the loss before each step (plus the final loss).
    """
    if train_set.n < 1:
        raise ValidationError("training set must be non-empty")
    x_aug = _augment(train_set.features.data)
    labels = train_set.labels
    k = train_set.n_classes
    n = train_set.n
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0

    weights = np.zeros((k, x_aug.shape[1]))
    for _ in range(cfg.iterations):
        if loss_history is not None:
            loss_history.append(_loss(weights, x_aug, labels, cfg.l2))
        probs = _softmax(x_aug @ weights.T)
        grad = (probs - onehot).T @ x_aug / n
        grad[:, :-1] += cfg.l2 * weights[:, :-1]
        weights -= cfg.learning_rate * grad
    if loss_history is not None:
        loss_history.append(_loss(weights, x_aug, labels, cfg.l2))
    return LogisticModel(weights, cfg.digest())


def predict(model: LogisticModel, features: FeatureMatrix) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    if features.dim != model.dim:
        raise ValidationError(
            f"model expects dim {model.dim}, features have dim {features.dim}"
        )
    logits = _augment(features.data) @ model.weights.T
    return logits.argmax(axis=1)


def accuracy(model: LogisticModel, test: LabeledSet) -> float:
    """Fraction of correctly classified test rows."""
    if test.n < 1:
        raise ValidationError("test set must be non-empty")
    return float((predict(model, test.features) == test.labels).mean())


def utility_value(
    train_subset: LabeledSet | None,
    test: LabeledSet,
    cfg: TrainConfig,
) -> float:
    """Accuracy on ``test`` of a model trained on ``train_subset``.

    The empty subset (``None``) is worth ``1 / n_classes``, the accuracy
    of an uninformed guess.  Rows are reordered by id before training, so
    the value depends only on the subset's content.
    """
    if train_subset is None or train_subset.n == 0:
        return 1.0 / test.n_classes
    order = sorted(range(train_subset.n), key=lambda i: train_subset.features.ids[i])
    canonical = train_subset.subset(order)
    return accuracy(train(canonical, cfg), test)


def concat_labeled(first: LabeledSet, second: LabeledSet) -> LabeledSet:
    """Stack two labeled sets; ids must stay globally unique."""
    if first.dim != second.dim:
        raise ValidationError("feature dimensions differ")
    if first.n_classes != second.n_classes:
        raise ValidationError("class counts differ")
    ids = list(first.features.ids) + list(second.features.ids)
    data = np.vstack([first.features.data, second.features.data])
    labels = np.concatenate([first.labels, second.labels])
    return LabeledSet(FeatureMatrix(ids, data), labels, first.n_classes)
