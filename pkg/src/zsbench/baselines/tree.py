"""CART-style decision tree: greedy Gini splits on feature thresholds.

Split ties are broken by lowest feature index, then lowest threshold, so
trees are deterministic. A node splits only when the weighted child
impurity strictly improves on the parent's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dataset import LabelSchema
from ..features import FeatureVector
from .common import (
    ScoredPrediction,
    TrainingError,
    check_training_input,
    distribution_to_prediction,
)


@dataclass
class TreeNode:
    distribution: np.ndarray  # class frequencies at this node, normalized
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_json_dict(self) -> dict:
        out = {"n": self.n_samples, "dist": self.distribution.tolist()}
        if not self.is_leaf:
            out.update(
                feature=self.feature,
                threshold=self.threshold,
                left=self.left.to_json_dict(),
                right=self.right.to_json_dict(),
            )
        return out


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def _best_split(
    xd: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    feature_ids: np.ndarray,
    n_classes: int,
    min_leaf: int,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, weighted child gini) over the candidates.

    Thresholds are midpoints between consecutive distinct values; samples
    with value <= threshold go left.
    """
    n = len(rows)
    labels = y[rows]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0

    best: tuple[float, int, float] | None = None
    for f in feature_ids:
        values = xd[rows, f]
        # constant columns (common with sparse tf-idf) cannot split
        if values.min() == values.max():
            continue
        order = np.argsort(values, kind="stable")
        sorted_vals = values[order]
        cum = np.cumsum(onehot[order], axis=0)

        # candidate boundaries: positions where the value strictly increases
        boundary = np.flatnonzero(sorted_vals[:-1] < sorted_vals[1:]) + 1
        if min_leaf > 0:
            boundary = boundary[(boundary >= min_leaf) & (n - boundary >= min_leaf)]
        if boundary.size == 0:
            continue

        left = cum[boundary - 1]
        right = cum[-1] - left
        n_left = boundary.astype(float)
        n_right = n - n_left
        gini_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
        weighted = (n_left * gini_left + n_right * gini_right) / n

        pos = int(np.argmin(weighted))
        score = float(weighted[pos])
        if best is None or score < best[0] - 1e-12:
            b = boundary[pos]
            threshold = float((sorted_vals[b - 1] + sorted_vals[b]) / 2.0)
            best = (score, int(f), threshold)
    if best is None:
        return None
    return best[1], best[2], best[0]


def _grow(
    xd: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    n_classes: int,
    depth: int,
    max_depth: int,
    min_leaf: int,
    feature_picker,
) -> TreeNode:
    counts = np.bincount(y[rows], minlength=n_classes).astype(float)
    node = TreeNode(distribution=counts / counts.sum(), n_samples=len(rows))

    parent_gini = _gini(counts)
    if depth >= max_depth or parent_gini == 0.0 or len(rows) < 2 * min_leaf:
        return node
    split = _best_split(xd, y, rows, feature_picker(), n_classes, min_leaf)
    if split is None:
        return node
    feature, threshold, child_gini = split
    if child_gini >= parent_gini - 1e-12:
        return node

    mask = xd[rows, feature] <= threshold
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(xd, y, rows[mask], n_classes, depth + 1, max_depth, min_leaf, feature_picker)
    node.right = _grow(xd, y, rows[~mask], n_classes, depth + 1, max_depth, min_leaf, feature_picker)
    return node


class TreeModel:
    name = "dt"

    def __init__(self, schema: LabelSchema, root: TreeNode, max_depth: int, min_leaf: int, dim: int):
        self.schema = schema
        self.root = root
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def _leaf_for(self, dense: np.ndarray) -> TreeNode:
        node = self.root
        while not node.is_leaf:
            node = node.left if dense[node.feature] <= node.threshold else node.right
        return node

    def predict_scores(self, feature: FeatureVector, doc_id: int = -1) -> ScoredPrediction:
        if feature.dim != self._dim:
            raise TrainingError(f"feature dimension {feature.dim} != model dimension {self._dim}")
        leaf = self._leaf_for(feature.to_dense())
        return distribution_to_prediction(leaf.distribution.copy(), self.schema, doc_id)

    def predict_all(self, features: list[FeatureVector], doc_ids=None) -> list[ScoredPrediction]:
        doc_ids = doc_ids if doc_ids is not None else [-1] * len(features)
        return [self.predict_scores(f, i) for f, i in zip(features, doc_ids)]

    def to_json_dict(self) -> dict:
        return {
            "kind": "dt",
            "labels": list(self.schema.labels),
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "root": self.root.to_json_dict(),
        }


def _all_features(dim: int):
    ids = np.arange(dim)
    return lambda: ids


def grow_tree(
    xd: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    schema: LabelSchema,
    max_depth: int,
    min_leaf: int,
    feature_picker=None,
) -> TreeNode:
    picker = feature_picker if feature_picker is not None else _all_features(xd.shape[1])
    return _grow(xd, y, rows, len(schema), 0, max_depth, min_leaf, picker)


def train_dt(
    features: list[FeatureVector],
    labels: list[str],
    schema: LabelSchema,
    max_depth: int = 32,
    min_leaf: int = 1,
) -> TreeModel:
    if max_depth < 1:
        raise TrainingError(f"max_depth must be >= 1, got {max_depth}")
    if min_leaf < 1:
        raise TrainingError(f"min_leaf must be >= 1, got {min_leaf}")
    x, y = check_training_input(features, labels, schema)
    xd = x.toarray()
    root = grow_tree(xd, y, np.arange(xd.shape[0]), schema, max_depth, min_leaf)
    return TreeModel(schema, root, max_depth, min_leaf, xd.shape[1])


def sqrt_feature_count(dim: int) -> int:
    return max(1, int(math.isqrt(dim)))
