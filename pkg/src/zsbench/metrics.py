"""Evaluation suite: confusion matrix, ACC, macro-F1, MCC, one-vs-rest AUC,
and mean±std aggregation of repeated runs.

Conventions: per-class F1 with no predictions and no positives is 0; MCC
with a zero denominator is 0; AUC uses the Mann-Whitney rank statistic
with ties counted as half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import ScoredPrediction
from .dataset import LabelSchema


class MetricsError(ValueError):
    """Raised for malformed metric input."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows are true labels, columns predictions, both in
    schema order."""

    schema: LabelSchema
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        k = len(self.schema)
        counts = tuple(tuple(int(c) for c in row) for row in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != k or any(len(row) != k for row in counts):
            raise MetricsError(f"confusion matrix must be {k}x{k}")
        if any(c < 0 for row in counts for c in row):
            raise MetricsError("confusion matrix entries must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.as_array().sum())


def confusion_matrix(
    truth: list[str], pred: list[str], schema: LabelSchema
) -> ConfusionMatrix:
    """Count (true, predicted) label pairs. All labels must be in-schema;
    the caller maps invalid predictions beforehand."""
    if len(truth) != len(pred):
        raise MetricsError(f"length mismatch: {len(truth)} truths vs {len(pred)} predictions")
    index = {label: i for i, label in enumerate(schema.labels)}
    counts = np.zeros((len(schema), len(schema)), dtype=np.int64)
    for t, p in zip(truth, pred):
        if t not in index:
            raise MetricsError(f"unknown true label {t!r}")
        if p not in index:
            raise MetricsError(f"unknown predicted label {p!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(schema=schema, counts=tuple(map(tuple, counts.tolist())))


def accuracy(cm: ConfusionMatrix) -> float:
    a = cm.as_array()
    total = a.sum()
    if total == 0:
        raise MetricsError("empty confusion matrix")
    return float(np.trace(a) / total)


def per_class_prf(cm: ConfusionMatrix) -> dict[str, dict[str, float]]:
    """Per-class precision, recall and F1 with 0/0 -> 0."""
    a = cm.as_array().astype(float)
    out = {}
    for i, label in enumerate(cm.schema.labels):
        tp = a[i, i]
        fp = a[:, i].sum() - tp
        fn = a[i, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        out[label] = {"precision": precision, "recall": recall, "f1": f1}
    return out


def macro_f1(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise MetricsError("empty confusion matrix")
    prf = per_class_prf(cm)
    return float(np.mean([v["f1"] for v in prf.values()]))


def mcc(cm: ConfusionMatrix) -> float:
    """Multi-class Matthews correlation (covariance form over the matrix)."""
    a = cm.as_array().astype(float)
    s = a.sum()
    if s == 0:
        raise MetricsError("empty confusion matrix")
    c = np.trace(a)
    t = a.sum(axis=1)  # true counts
    p = a.sum(axis=0)  # predicted counts
    cov = c * s - float(t @ p)
    denom = math.sqrt(s * s - float(p @ p)) * math.sqrt(s * s - float(t @ t))
    if denom == 0:
        return 0.0
    return float(cov / denom)


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney AUC of `scores` ranking positives above negatives."""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("binary AUC needs at least one positive and one negative")
    ranks = _midranks(scores)
    rank_sum = float(ranks[positive].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auc_ovr_details(
    truth: list[str], scores: list[ScoredPrediction], schema: LabelSchema
) -> tuple[dict[str, float], list[str]]:
    """Per-class one-vs-rest AUCs plus the list of skipped classes.

    A class is skipped when the evaluation set has no positive or no
    negative example for it.
    """
    if len(truth) != len(scores):
        raise MetricsError(f"length mismatch: {len(truth)} truths vs {len(scores)} scores")
    if any(len(sp.scores) != len(schema) for sp in scores):
        raise MetricsError("score vector length does not match schema")
    index = {label: i for i, label in enumerate(schema.labels)}
    try:
        y = np.array([index[t] for t in truth])
    except KeyError as exc:
        raise MetricsError(f"unknown true label {exc.args[0]!r}") from exc
    score_matrix = np.array([sp.scores for sp in scores])

    per_class: dict[str, float] = {}
    skipped: list[str] = []
    for label, i in index.items():
        positive = y == i
        if positive.all() or not positive.any():
            skipped.append(label)
            continue
        per_class[label] = binary_auc(score_matrix[:, i], positive)
    return per_class, skipped


def auc_ovr_macro(
    truth: list[str], scores: list[ScoredPrediction], schema: LabelSchema
) -> float:
    """Macro average of per-class one-vs-rest AUCs."""
    per_class, skipped = auc_ovr_details(truth, scores, schema)
    if not per_class:
        raise MetricsError(f"all classes skipped for AUC: {skipped}")
    return float(np.mean(list(per_class.values())))


@dataclass(frozen=True)
class EvalReport:
    """Single-run evaluation of one predictor."""

    acc: float
    macro_f1: float
    mcc: float
    auc: float | None
    confusion: ConfusionMatrix
    per_class: dict[str, dict[str, float]]
    n_invalid_predictions: int = 0

    @property
    def n_items(self) -> int:
        return self.confusion.total

    def to_json_dict(self) -> dict:
        return {
            "acc": self.acc,
            "macro_f1": self.macro_f1,
            "mcc": self.mcc,
            "auc": self.auc,
            "confusion": [list(row) for row in self.confusion.counts],
            "labels": list(self.confusion.schema.labels),
            "per_class": self.per_class,
            "n_invalid_predictions": self.n_invalid_predictions,
            "n_items": self.n_items,
        }


def build_report(
    truth: list[str],
    pred: list[str],
    schema: LabelSchema,
    scores: list[ScoredPrediction] | None = None,
    n_invalid: int = 0,
) -> EvalReport:
    """Assemble the full report; AUC is present only when scores are given.

    Label-only predictors pass scores=None and get auc=None.
    """
    cm = confusion_matrix(truth, pred, schema)
    auc = None
    if scores is not None:
        auc = auc_ovr_macro(truth, scores, schema)
    return EvalReport(
        acc=accuracy(cm),
        macro_f1=macro_f1(cm),
        mcc=mcc(cm),
        auc=auc,
        confusion=cm,
        per_class=per_class_prf(cm),
        n_invalid_predictions=n_invalid,
    )


@dataclass(frozen=True)
class RunAggregate:
    """Mean and sample standard deviation of a metric across repeats."""

    metric: str
    values: tuple[float, ...] = field(default_factory=tuple)
    mean: float = 0.0
    std: float | None = None

    def format(self, digits: int = 4) -> str:
        if self.std is None:
            return f"{self.mean:.{digits}f}"
        return f"{self.mean:.{digits}f}±{self.std:.{digits}f}"

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "values": list(self.values),
            "mean": self.mean,
            "std": self.std,
        }


def aggregate_runs(values: list[float], metric: str = "") -> RunAggregate:
    """Mean and (n-1) standard deviation; std is undefined for one value."""
    if not values:
        raise MetricsError("no values to aggregate")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) >= 2 else None
    return RunAggregate(metric=metric, values=tuple(values), mean=mean, std=std)
