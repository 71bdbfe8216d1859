"""Multinomial softmax regression trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from ..dataset import LabelSchema
from ..features import FeatureVector
from .common import (
    ScoredPrediction,
    TrainingError,
    as_row,
    check_training_input,
    distribution_to_prediction,
)


class DivergenceError(TrainingError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged: loss became non-finite at epoch {epoch}")
        self.epoch = epoch


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def _loss(weights, bias, x, y_onehot, l2_lambda):
    """Mean cross-entropy plus (lambda/2)||W||^2.

    A true-class probability underflowing to zero makes the loss infinite,
    which the training loop reports as divergence.
    """
    probs = softmax(x @ weights.T + bias)
    n = x.shape[0]
    with np.errstate(divide="ignore"):
        ce = -np.log(probs[np.arange(n), y_onehot.argmax(axis=1)]).mean()
    return ce + 0.5 * l2_lambda * float((weights * weights).sum())


def _grads(weights, bias, x, y_onehot, l2_lambda):
    """Analytic gradient of _loss w.r.t. weights and bias."""
    probs = softmax(x @ weights.T + bias)
    n = x.shape[0]
    delta = (probs - y_onehot) / n
    grad_w = (x.T @ delta).T + l2_lambda * weights
    grad_b = delta.sum(axis=0)
    return np.asarray(grad_w), grad_b


class LogRegModel:
    name = "logreg"

    def __init__(self, schema: LabelSchema, weights: np.ndarray, bias: np.ndarray, loss_history: list[float]):
        self.schema = schema
        self.weights = weights  # shape (K, V)
        self.bias = bias
        self.loss_history = loss_history

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def predict_scores(self, feature: FeatureVector, doc_id: int = -1) -> ScoredPrediction:
        x = as_row(feature, self.dim)
        logits = (x @ self.weights.T).ravel() + self.bias
        return distribution_to_prediction(softmax(logits), self.schema, doc_id)

    def predict_all(self, features: list[FeatureVector], doc_ids=None) -> list[ScoredPrediction]:
        doc_ids = doc_ids if doc_ids is not None else [-1] * len(features)
        return [self.predict_scores(f, i) for f, i in zip(features, doc_ids)]

    def to_json_dict(self) -> dict:
        return {
            "kind": "logreg",
            "labels": list(self.schema.labels),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }


def train_logreg(
    features: list[FeatureVector],
    labels: list[str],
    schema: LabelSchema,
    learning_rate: float = 0.1,
    l2_lambda: float = 1e-4,
    epochs: int = 200,
    seed: int = 0,
) -> LogRegModel:
    """Full-batch gradient descent on cross-entropy with L2 penalty.

    Weights start at zero, so the result is deterministic; `seed` is
    accepted for config symmetry but unused without minibatching.
    """
    del seed
    if learning_rate <= 0:
        raise TrainingError(f"learning_rate must be positive, got {learning_rate}")
    if epochs < 0:
        raise TrainingError(f"epochs must be non-negative, got {epochs}")
    x, y = check_training_input(features, labels, schema)
    k = len(schema)
    y_onehot = np.zeros((x.shape[0], k))
    y_onehot[np.arange(x.shape[0]), y] = 1.0

    weights = np.zeros((k, x.shape[1]))
    bias = np.zeros(k)
    history = []
    for epoch in range(epochs):
        loss = _loss(weights, bias, x, y_onehot, l2_lambda)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        history.append(float(loss))
        grad_w, grad_b = _grads(weights, bias, x, y_onehot, l2_lambda)
        weights -= learning_rate * grad_w
        bias -= learning_rate * grad_b
    return LogRegModel(schema, weights, bias, history)
