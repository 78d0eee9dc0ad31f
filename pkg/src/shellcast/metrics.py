"""Confusion-matrix statistics for closure forecasting.

Closures of production areas are the positive class; openings are negative.
Ratios with a zero denominator are reported as undefined (None) instead of
being coerced to 0, so undefined folds can be excluded from averages
explicitly rather than silently dragging them down.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "ConfusionMatrix",
    "KappaBand",
    "MetricsReport",
    "MetricSummary",
    "FoldSummary",
    "confusion",
    "accuracy",
    "recall",
    "precision",
    "f1",
    "kappa",
    "kappa_band",
    "evaluate",
    "summarize_folds",
]

METRIC_NAMES = ("accuracy", "recall", "precision", "f1", "kappa")


class KappaBand(enum.Enum):
    """Agreement bands for Cohen's kappa (Landis-Koch scale)."""

    NO_AGREEMENT = "no_agreement"
    SLIGHT = "slight"
    FAIR = "fair"
    MODERATE = "moderate"
    SUBSTANTIAL = "substantial"
    ALMOST_PERFECT = "almost_perfect"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts with closure = positive.

    tp: closures predicted closed, fp: openings predicted closed,
    fn: closures predicted open, tn: openings predicted open.
    """

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"confusion count {name} must be >= 0, got {value}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(predictions, labels) -> ConfusionMatrix:
    """Count tp/fp/fn/tn from parallel binary sequences."""
    preds = list(predictions)
    labs = list(labels)
    if len(preds) != len(labs):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(labs)} labels")
    if not preds:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    tp = fp = fn = tn = 0
    for p, y in zip(preds, labs):
        if p not in (0, 1) or y not in (0, 1):
            raise ValueError(f"non-binary value in predictions/labels: ({p}, {y})")
        if p == 1 and y == 1:
            tp += 1
        elif p == 1 and y == 0:
            fp += 1
        elif p == 0 and y == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def accuracy(cm: ConfusionMatrix) -> float | None:
    """(tp + tn) / total, or None on an empty matrix."""
    if cm.total == 0:
        return None
    return (cm.tp + cm.tn) / cm.total


def recall(cm: ConfusionMatrix) -> float | None:
    """tp / (tp + fn); None when there are no actual positives."""
    denom = cm.tp + cm.fn
    if denom == 0:
        return None
    return cm.tp / denom


def precision(cm: ConfusionMatrix) -> float | None:
    """tp / (tp + fp); None when nothing was predicted positive."""
    denom = cm.tp + cm.fp
    if denom == 0:
        return None
    return cm.tp / denom


def f1(cm: ConfusionMatrix) -> float | None:
    """Harmonic mean of precision and recall; None when either is
    undefined or both are zero."""
    r = recall(cm)
    p = precision(cm)
    if r is None or p is None or (r + p) == 0:
        return None
    return 2.0 * (r * p) / (r + p)


def kappa(cm: ConfusionMatrix) -> float | None:
    """Cohen's kappa: (Pr(a) - Pr(e)) / (1 - Pr(e)).

    Pr(a) is observed agreement (tp + tn) / n and Pr(e) the chance
    agreement ((tp+fp)(tp+fn) + (fn+tn)(fp+tn)) / n^2.  Pr(e) = 1 only
    happens when predictions and labels are the same single class, in
    which case agreement is perfect and kappa is 1 by convention.
    """
    n = cm.total
    if n == 0:
        return None
    pr_a = (cm.tp + cm.tn) / n
    pr_e = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)) / (n * n)
    if pr_e >= 1.0:
        return 1.0
    return (pr_a - pr_e) / (1.0 - pr_e)


def chance_agreement(cm: ConfusionMatrix) -> tuple[float, float]:
    """Return (Pr(a), Pr(e)) for a non-empty matrix."""
    n = cm.total
    if n == 0:
        raise ValueError("empty confusion matrix")
    pr_a = (cm.tp + cm.tn) / n
    pr_e = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)) / (n * n)
    return pr_a, pr_e


def kappa_band(k: float) -> KappaBand:
    """Map a kappa value in [-1, 1] onto its agreement band.

    Bands are closed on the right: 0.80 is still Substantial, 0.81 is
    Almost perfect.
    """
    if math.isnan(k) or k < -1.0 or k > 1.0:
        raise ValueError(f"kappa must be in [-1, 1], got {k}")
    if k < 0.0:
        return KappaBand.NO_AGREEMENT
    if k <= 0.20:
        return KappaBand.SLIGHT
    if k <= 0.40:
        return KappaBand.FAIR
    if k <= 0.60:
        return KappaBand.MODERATE
    if k <= 0.80:
        return KappaBand.SUBSTANTIAL
    return KappaBand.ALMOST_PERFECT


@dataclass(frozen=True)
class MetricsReport:
    """All headline metrics for one evaluation, undefined values as None."""

    accuracy: float | None
    recall: float | None
    precision: float | None
    f1: float | None
    kappa: float | None
    kappa_band: KappaBand | None
    pr_a: float | None
    pr_e: float | None

    def to_dict(self) -> dict:
        """Flat JSON-ready dict with fixed key names."""
        return {
            "accuracy": self.accuracy,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "kappa": self.kappa,
            "kappa_band": self.kappa_band.value if self.kappa_band is not None else None,
        }

    def value(self, name: str) -> float | None:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return getattr(self, name)


def evaluate(cm: ConfusionMatrix) -> MetricsReport:
    """Compute the full metric report from one confusion matrix."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    k = kappa(cm)
    pr_a, pr_e = chance_agreement(cm)
    return MetricsReport(
        accuracy=accuracy(cm),
        recall=recall(cm),
        precision=precision(cm),
        f1=f1(cm),
        kappa=k,
        kappa_band=kappa_band(k) if k is not None else None,
        pr_a=pr_a,
        pr_e=pr_e,
    )


@dataclass(frozen=True)
class MetricSummary:
    """Mean and sample std of one metric across folds.

    Folds where the metric was undefined are excluded; n_undefined says
    how many were dropped.  std is None when fewer than 2 folds defined
    the metric.
    """

    mean: float | None
    std: float | None
    n_used: int
    n_undefined: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "n_used": self.n_used,
            "n_undefined": self.n_undefined,
        }


@dataclass(frozen=True)
class FoldSummary:
    """Per-metric summaries over a set of fold reports."""

    metrics: dict[str, MetricSummary]

    def to_dict(self) -> dict:
        return {name: ms.to_dict() for name, ms in self.metrics.items()}


def summarize_folds(reports) -> FoldSummary:
    """Aggregate fold reports into per-metric mean and sample (n-1) std."""
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("need at least 2 fold reports to summarize")
    out: dict[str, MetricSummary] = {}
    for name in METRIC_NAMES:
        values = [r.value(name) for r in reports]
        defined = [v for v in values if v is not None]
        n_used = len(defined)
        n_undefined = len(values) - n_used
        if n_used == 0:
            out[name] = MetricSummary(mean=None, std=None, n_used=0, n_undefined=n_undefined)
            continue
        mean = sum(defined) / n_used
        if n_used >= 2:
            var = sum((v - mean) ** 2 for v in defined) / (n_used - 1)
            std = math.sqrt(var)
        else:
            std = None
        out[name] = MetricSummary(mean=mean, std=std, n_used=n_used, n_undefined=n_undefined)
    return FoldSummary(metrics=out)
