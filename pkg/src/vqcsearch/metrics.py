"""Evaluation metrics and proxy-vs-performance correlation.

Classification metrics follow the +-1 label coding used everywhere else in
the package: MSE is computed on raw circuit outputs in [-1, 1], the decision
threshold is 0, and PR-AUC is average precision over a descending-score sweep
with tied scores grouped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class MetricReport:
    """Test-set metrics for one trained circuit; fields unused by the task stay None."""

    mse: float
    accuracy: Optional[float] = None
    f1: Optional[float] = None
    pr_auc: Optional[float] = None
    spearman_r: Optional[float] = None

    def get(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise KeyError(f"metric {name!r} not available on this report")
        return float(value)


def _as_1d(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d")
    return arr


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Average precision with tie grouping.

    Sweeps distinct score values in descending order; each group contributes
    (delta recall) * (precision at the group), the step-wise non-interpolated
    estimator.  Requires both classes present.
    """
    scores = _as_1d("scores", scores)
    labels = _as_1d("labels", labels)
    n_pos = int(np.sum(labels == 1.0))
    n_neg = int(np.sum(labels == -1.0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("PR-AUC undefined: labels contain a single class")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    ap = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    n = scores.shape[0]
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            j += 1
        tp += int(np.sum(sorted_labels[i:j] == 1.0))
        fp += (j - i) - int(np.sum(sorted_labels[i:j] == 1.0))
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j
    return float(ap)


def classification_metrics(scores, labels) -> MetricReport:
    """MSE / accuracy / F1 / PR-AUC of raw scores against +-1 labels.

    The decision rule is score >= 0 -> +1, the midpoint of the label coding;
    F1 treats +1 as the positive class.
    """
    scores = _as_1d("scores", scores)
    labels = _as_1d("labels", labels)
    if scores.shape != labels.shape or scores.size == 0:
        raise ValueError("scores and labels must be nonempty and equal length")
    if np.any((labels != 1.0) & (labels != -1.0)):
        raise ValueError("labels must be in {-1, +1}")
    preds = np.where(scores >= 0.0, 1.0, -1.0)
    tp = float(np.sum((preds == 1.0) & (labels == 1.0)))
    fp = float(np.sum((preds == 1.0) & (labels == -1.0)))
    fn = float(np.sum((preds == -1.0) & (labels == 1.0)))
    f1 = 2.0 * tp / (2.0 * tp + fp + fn) if (2.0 * tp + fp + fn) > 0 else 0.0
    return MetricReport(
        mse=float(np.mean((scores - labels) ** 2)),
        accuracy=float(np.mean(preds == labels)),
        f1=f1,
        pr_auc=average_precision(scores, labels),
    )


def regression_metrics(preds, targets) -> MetricReport:
    preds = _as_1d("preds", preds)
    targets = _as_1d("targets", targets)
    if preds.shape != targets.shape or preds.size == 0:
        raise ValueError("preds and targets must be nonempty and equal length")
    return MetricReport(
        mse=float(np.mean((preds - targets) ** 2)),
        spearman_r=spearman(preds, targets),
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    n = values.shape[0]
    while i < n:
        j = i
        while j < n and values[order[j]] == values[order[i]]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0  # mean of positions i+1 .. j
        i = j
    return ranks


def spearman(xs, ys) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    xs = _as_1d("xs", xs)
    ys = _as_1d("ys", ys)
    if xs.shape != ys.shape:
        raise ValueError("length mismatch")
    if xs.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ValueError("spearman undefined for constant input")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(np.sum(rx * ry) / np.sqrt(np.sum(rx**2) * np.sum(ry**2)))


@dataclass(frozen=True)
class CorrelationRow:
    variant: str
    metric: str
    rho: float
    n_circuits: int


def correlation_report(
    scores_by_variant: dict[str, dict[str, float]],
    metric_values: dict[str, float],
    metric_name: str,
) -> tuple[list[CorrelationRow], dict[str, list[tuple[str, float, float]]]]:
    """Rank correlation between final scores and a test metric, per variant.

    ``scores_by_variant`` maps variant -> {circuit_id -> final_score};
    ``metric_values`` maps circuit_id -> metric value.  Returns the rho rows
    plus per-variant (circuit_id, score, metric) pairs ready for plotting.
    """
    rows: list[CorrelationRow] = []
    scatter: dict[str, list[tuple[str, float, float]]] = {}
    for variant in sorted(scores_by_variant):
        scores = scores_by_variant[variant]
        shared = sorted(set(scores) & set(metric_values))
        if len(shared) < 3:
            raise ValueError(
                f"variant {variant!r}: need >= 3 circuits with both a score and a metric, "
                f"got {len(shared)}"
            )
        xs = np.array([scores[cid] for cid in shared])
        ys = np.array([metric_values[cid] for cid in shared])
        rows.append(
            CorrelationRow(
                variant=variant,
                metric=metric_name,
                rho=spearman(xs, ys),
                n_circuits=len(shared),
            )
        )
        scatter[variant] = [
            (cid, float(scores[cid]), float(metric_values[cid])) for cid in shared
        ]
    return rows, scatter
