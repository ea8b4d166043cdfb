"""Classifier evaluation: confusion counts, derived metrics, ROC/AUC,
confidence intervals and the paired t-test.

The positive class is normal (+1) throughout. Student-t tail probabilities
are computed exactly through the regularized incomplete beta function
(continued-fraction expansion), so any sample size works without tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInput,
    LengthMismatch,
    SingleClassInput,
    TooFewValues,
    ZeroVarianceDifferences,
)


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion counts with +1 (normal) as the positive class."""

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class MetricSet:
    """Accuracy, precision, recall and F1 in [0, 1].

    ``degenerate`` flags that some denominator was zero and the affected
    metrics were pinned to 0 instead of raising.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class RocCurve:
    """Threshold-swept (fpr, tpr) points from (0,0) to (1,1) plus the AUC."""

    points: tuple[tuple[float, float], ...]
    auc: float


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionCounts:
    """Count tp/tn/fp/fn over +/-1 label vectors."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise LengthMismatch(
            f"label vectors must match: {y_true.shape} vs {y_pred.shape}"
        )
    if y_true.size == 0:
        raise EmptyInput("cannot build a confusion matrix from zero samples")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    tn = int(np.sum((y_true == -1) & (y_pred == -1)))
    fp = int(np.sum((y_true == -1) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == -1)))
    return ConfusionCounts(tp, tn, fp, fn)


def classification_metrics(c: ConfusionCounts) -> MetricSet:
    """Accuracy, precision, recall, F1 from confusion counts.

    Zero denominators yield 0 for the affected metric and set the
    degenerate flag, keeping fold aggregation total.
    """
    if c.total <= 0:
        raise EmptyInput("confusion counts sum to zero")
    accuracy = (c.tp + c.tn) / c.total
    degenerate = False
    if c.tp + c.fp > 0:
        precision = c.tp / (c.tp + c.fp)
    else:
        precision, degenerate = 0.0, True
    if c.tp + c.fn > 0:
        recall = c.tp / (c.tp + c.fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    return MetricSet(accuracy, precision, recall, f1, degenerate)


def roc_auc(scores: np.ndarray, y_true: np.ndarray) -> RocCurve:
    """ROC curve over all distinct score thresholds, with trapezoidal AUC.

    Samples sharing a score move across the threshold together, which makes
    the trapezoidal area equal the pairwise-ordering statistic with ties
    counted as one half.
    """
    scores = np.asarray(scores, dtype=float)
    y_true = np.asarray(y_true)
    if scores.shape != y_true.shape or scores.ndim != 1:
        raise LengthMismatch(f"shape mismatch: {scores.shape} vs {y_true.shape}")
    n_pos = int(np.sum(y_true == 1))
    n_neg = int(np.sum(y_true == -1))
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_truth = y_true[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = scores.shape[0]
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            j += 1
        block = sorted_truth[i:j]
        tp += int(np.sum(block == 1))
        fp += int(np.sum(block == -1))
        points.append((fp / n_neg, tp / n_pos))
        i = j

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(tuple(points), auc)


# -- Student-t machinery -----------------------------------------------------

def _betacf(a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Continued fraction for the incomplete beta function (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to about 1e-10 over (0, 1)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the expansion on the side where it converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Two-sided survival probability P(|T| >= |t|) for Student-t."""
    if df <= 0:
        raise TooFewValues(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def student_t_quantile(p: float, df: float) -> float:
    """Inverse CDF of Student-t by bisection on the exact tail probability."""
    if not 0.0 < p < 1.0:
        raise TooFewValues(f"quantile probability must be in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_quantile(1.0 - p, df)
    # P(T <= q) = p  <=>  two-sided tail = 2(1 - p) at positive q
    target = 2.0 * (1.0 - p)
    lo, hi = 0.0, 1.0
    while student_t_sf(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_sf(mid, df) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def summary_stats(values: np.ndarray, confidence: float = 0.95) -> tuple[float, float, float, float]:
    """Sample mean, sample std and the Student-t confidence interval.

    Returns (mean, std, ci_low, ci_high) with the interval
    mean +/- t_{(1+confidence)/2, n-1} * std / sqrt(n).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise TooFewValues("need at least two values for summary statistics")
    if not 0.0 < confidence < 1.0:
        raise TooFewValues(f"confidence must be in (0, 1), got {confidence}")
    n = values.size
    mean = float(values.mean())
    std = float(values.std(ddof=1))
    if std == 0.0:
        return mean, 0.0, mean, mean
    half = student_t_quantile(0.5 * (1.0 + confidence), n - 1) * std / math.sqrt(n)
    return mean, std, mean - half, mean + half


def format_percent_mean_std(mean: float, std: float) -> str:
    """Render a [0, 1] metric as a percent table entry, e.g. '99.72 ± 0.15'."""
    return f"{100.0 * mean:.2f} ± {100.0 * std:.2f}"


def paired_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sided paired t-test on the differences a - b.

    Returns (t statistic, p value). The p value comes from the exact
    Student-t tail via the incomplete beta function.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"paired samples must match: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise TooFewValues("need at least two pairs")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise ZeroVarianceDifferences("paired differences have zero variance")
    t = float(d.mean()) / (sd / math.sqrt(n))
    return t, student_t_sf(t, n - 1)
