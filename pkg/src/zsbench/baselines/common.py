"""Shared prediction types and helpers for the from-scratch classifiers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..dataset import LabelSchema
from ..features import FeatureVector, to_csr


class TrainingError(ValueError):
    """Raised when training input violates a classifier's contract."""


@dataclass(frozen=True)
class ScoredPrediction:
    """A probability distribution over labels plus its argmax.

    Scores follow schema order and sum to 1; ties in the argmax resolve
    to the earliest schema label.
    """

    doc_id: int
    label: str
    scores: tuple[float, ...]


def distribution_to_prediction(
    scores: np.ndarray, schema: LabelSchema, doc_id: int
) -> ScoredPrediction:
    """Wrap a score vector as a ScoredPrediction, normalizing defensively."""
    total = float(scores.sum())
    if total <= 0 or not np.isfinite(total):
        scores = np.full(len(schema), 1.0 / len(schema))
    else:
        scores = scores / total
    label = schema.labels[int(np.argmax(scores))]
    return ScoredPrediction(doc_id=doc_id, label=label, scores=tuple(scores.tolist()))


def encode_labels(labels: list[str], schema: LabelSchema) -> np.ndarray:
    """Map label names to schema indices."""
    index = {label: i for i, label in enumerate(schema.labels)}
    try:
        return np.array([index[lab] for lab in labels], dtype=np.intp)
    except KeyError as exc:
        raise TrainingError(f"label {exc.args[0]!r} not in schema") from exc


def check_training_input(
    features: list[FeatureVector],
    labels: list[str],
    schema: LabelSchema,
    require_all_classes: bool = False,
) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Validate and pack a training set.

    `require_all_classes` is for trainers whose math needs every class
    observed (MNB priors); trees and neighbours cope with absent classes.
    """
    if not features:
        raise TrainingError("empty training set")
    if len(features) != len(labels):
        raise TrainingError(
            f"{len(features)} feature vectors but {len(labels)} labels"
        )
    y = encode_labels(labels, schema)
    if require_all_classes:
        present = set(y.tolist())
        missing = [lab for i, lab in enumerate(schema.labels) if i not in present]
        if missing:
            raise TrainingError(f"classes absent from training set: {missing}")
    return to_csr(features), y


def as_row(feature: FeatureVector, dim: int) -> sparse.csr_matrix:
    if feature.dim != dim:
        raise TrainingError(f"feature dimension {feature.dim} != model dimension {dim}")
    return to_csr([feature])
