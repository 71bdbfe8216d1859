"""k-nearest-neighbour classifier with cosine similarity voting."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from ..dataset import LabelSchema
from ..features import FeatureVector
from .common import (
    ScoredPrediction,
    TrainingError,
    as_row,
    check_training_input,
    distribution_to_prediction,
)


class KnnModel:
    """Lazy learner: stores the training matrix verbatim.

    Similarity ties are broken by training-row order so predictions are
    reproducible; a zero vector on either side has similarity 0.
    """

    name = "knn"

    def __init__(self, schema: LabelSchema, x: sparse.csr_matrix, y: np.ndarray, k: int):
        self.schema = schema
        self.x = x
        self.y = y
        self.k = k
        norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
        self._inv_norms = np.zeros_like(norms)
        nonzero = norms > 0
        self._inv_norms[nonzero] = 1.0 / norms[nonzero]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def predict_scores(self, feature: FeatureVector, doc_id: int = -1) -> ScoredPrediction:
        row = as_row(feature, self.dim)
        row_norm = np.sqrt(row.multiply(row).sum())
        sims = np.asarray((self.x @ row.T).todense()).ravel() * self._inv_norms
        if row_norm > 0:
            sims /= row_norm
        else:
            sims[:] = 0.0
        order = np.lexsort((np.arange(len(sims)), -sims))
        votes = np.zeros(len(self.schema))
        for idx in order[: self.k]:
            votes[self.y[idx]] += 1.0
        return distribution_to_prediction(votes / self.k, self.schema, doc_id)

    def predict_all(self, features: list[FeatureVector], doc_ids=None) -> list[ScoredPrediction]:
        doc_ids = doc_ids if doc_ids is not None else [-1] * len(features)
        return [self.predict_scores(f, i) for f, i in zip(features, doc_ids)]

    def to_json_dict(self) -> dict:
        return {
            "kind": "knn",
            "k": self.k,
            "labels": list(self.schema.labels),
            "train_labels": self.y.tolist(),
            "train_matrix": self.x.toarray().tolist(),
        }


def train_knn(
    features: list[FeatureVector], labels: list[str], schema: LabelSchema, k: int = 5
) -> KnnModel:
    x, y = check_training_input(features, labels, schema)
    if k < 1:
        raise TrainingError(f"k must be positive, got {k}")
    if k % 2 == 0:
        raise TrainingError(f"k must be odd, got {k}")
    if k > x.shape[0]:
        raise TrainingError(f"k={k} exceeds training set size {x.shape[0]}")
    return KnnModel(schema, x, y, k)
