"""Confusion-matrix accounting, per-class metrics, and multi-seed aggregation.

Recession is the positive class (label 1) throughout the library; expansion
metrics are obtained by flipping the positive class. Ratios with zero
denominators are reported as 0, which is what a model that never predicts the
positive class earns for precision and F1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

METRIC_KEYS = (
    "accuracy",
    "recession_recall",
    "recession_precision",
    "recession_f1",
    "expansion_recall",
    "expansion_precision",
    "expansion_f1",
)


class EvaluationError(Exception):
    pass


class LengthMismatchError(EvaluationError):
    pass


class EmptyEvaluationError(EvaluationError):
    pass


class InsufficientRunsError(EvaluationError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    recall: float
    precision: float
    f1: float


def _labels_array(predictions) -> np.ndarray:
    if len(predictions) and hasattr(predictions[0], "label"):
        return np.array([p.label for p in predictions], dtype=np.int64)
    return np.asarray(predictions, dtype=np.int64)


def confusion(predictions, labels, positive_class: int = 1) -> Confusion:
    """Count tp/fp/fn/tn with the given positive class."""
    pred = _labels_array(predictions)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape:
        raise LengthMismatchError(f"{pred.shape} predictions vs {true.shape} labels")
    pos_pred = pred == positive_class
    pos_true = true == positive_class
    return Confusion(
        tp=int(np.sum(pos_pred & pos_true)),
        fp=int(np.sum(pos_pred & ~pos_true)),
        fn=int(np.sum(~pos_pred & pos_true)),
        tn=int(np.sum(~pos_pred & ~pos_true)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def metrics(c: Confusion) -> MetricSet:
    """Accuracy, recall, precision, and F1 from one confusion matrix."""
    if c.total == 0:
        raise EmptyEvaluationError("no evaluated windows")
    recall = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    f1 = _ratio(2 * recall * precision, recall + precision) if (recall + precision) > 0 else 0.0
    return MetricSet(
        accuracy=(c.tp + c.tn) / c.total,
        recall=recall,
        precision=precision,
        f1=f1,
    )


def run_metrics(predictions, labels) -> dict:
    """All seven reported metrics for one run, recession and expansion."""
    recession = metrics(confusion(predictions, labels, positive_class=1))
    expansion = metrics(confusion(predictions, labels, positive_class=0))
    return {
        "accuracy": recession.accuracy,
        "recession_recall": recession.recall,
        "recession_precision": recession.precision,
        "recession_f1": recession.f1,
        "expansion_recall": expansion.recall,
        "expansion_precision": expansion.precision,
        "expansion_f1": expansion.f1,
    }


@dataclass(frozen=True)
class ClassMetrics:
    """Per-metric (mean, population std) over repeated runs."""

    values: dict
    n_runs: int

    def mean(self, key: str) -> float:
        return self.values[key][0]

    def std(self, key: str) -> float:
        return self.values[key][1]


def aggregate_runs(per_run: list) -> ClassMetrics:
    """Mean and population standard deviation per metric over runs.

    Runs that agree bit-for-bit (deterministic models) aggregate to exactly
    (value, 0.0) with no floating-point residue.
    """
    if not per_run:
        raise InsufficientRunsError("need at least one run")
    values = {}
    for key in METRIC_KEYS:
        samples = np.array([run[key] for run in per_run], dtype=np.float64)
        if np.all(samples == samples[0]):
            values[key] = (float(samples[0]), 0.0)
        else:
            values[key] = (float(samples.mean()), float(samples.std()))
    return ClassMetrics(values=values, n_runs=len(per_run))


def format_mean_std(mean: float, std: float) -> str:
    """Percentage rendering used by the comparison tables, e.g. '94.8±1.4%'."""
    return f"{mean * 100:.1f}±{std * 100:.1f}%"


def welch_t_test(runs_a, runs_b) -> float:
    """Two-sided Welch t-test p-value with Welch-Satterthwaite df.

    Samples must each contain at least two values; zero-variance samples
    (deterministic models rerun per seed) are handled as exact constants.
    """
    a = np.asarray(runs_a, dtype=np.float64)
    b = np.asarray(runs_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InsufficientRunsError("each sample needs at least 2 runs")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    se2 = va / a.size + vb / b.size
    t_stat = (a.mean() - b.mean()) / np.sqrt(se2)
    df_num = se2**2
    df_den = 0.0
    if va > 0:
        df_den += (va / a.size) ** 2 / (a.size - 1)
    if vb > 0:
        df_den += (vb / b.size) ** 2 / (b.size - 1)
    df = df_num / df_den
    return float(2.0 * stats.t.sf(abs(t_stat), df))


def metrics_report(model: str, config_hash: str, per_run: list, significance: dict | None = None) -> dict:
    """The JSON-shaped record emitted for each model in an experiment."""
    agg = aggregate_runs(per_run)
    return {
        "model": model,
        "config_hash": config_hash,
        "per_run": per_run,
        "aggregate": {key: {"mean": agg.mean(key), "std": agg.std(key)} for key in METRIC_KEYS},
        "significance": significance or {},
        "std_convention": "population (divide by n)",
    }
