"""From-scratch traditional classifiers sharing one prediction interface.

Every model exposes predict_scores(feature, doc_id) returning a
ScoredPrediction whose scores form a probability distribution over the
schema labels.
"""

from __future__ import annotations

from ..dataset import LabelSchema
from ..features import FeatureVector
from .common import ScoredPrediction, TrainingError
from .forest import ForestModel, train_rf
from .knn import KnnModel, train_knn
from .logreg import DivergenceError, LogRegModel, train_logreg
from .mnb import MnbModel, train_mnb
from .tree import TreeModel, train_dt

BASELINE_NAMES = ("mnb", "logreg", "knn", "dt", "rf")

# common shorthand accepted in configs
BASELINE_ALIASES = {"lg": "logreg", "lr": "logreg"}

DISPLAY_NAMES = {"mnb": "MNB", "logreg": "LG", "knn": "KNN", "dt": "DT", "rf": "RF"}


def canonical_baseline_name(name: str) -> str | None:
    key = name.strip().lower()
    key = BASELINE_ALIASES.get(key, key)
    return key if key in BASELINE_NAMES else None


def train_baseline(
    name: str,
    features: list[FeatureVector],
    labels: list[str],
    schema: LabelSchema,
    **hyper,
):
    """Train the named baseline with its hyperparameters."""
    key = canonical_baseline_name(name)
    if key is None:
        raise TrainingError(f"unknown baseline {name!r}")
    trainer = {
        "mnb": train_mnb,
        "logreg": train_logreg,
        "knn": train_knn,
        "dt": train_dt,
        "rf": train_rf,
    }[key]
    return trainer(features, labels, schema, **hyper)


def predict_scores(model, feature: FeatureVector, doc_id: int = -1) -> ScoredPrediction:
    return model.predict_scores(feature, doc_id)


__all__ = [
    "BASELINE_NAMES",
    "DISPLAY_NAMES",
    "DivergenceError",
    "ForestModel",
    "KnnModel",
    "LogRegModel",
    "MnbModel",
    "ScoredPrediction",
    "TrainingError",
    "TreeModel",
    "canonical_baseline_name",
    "predict_scores",
    "train_baseline",
    "train_dt",
    "train_knn",
    "train_logreg",
    "train_mnb",
    "train_rf",
]
