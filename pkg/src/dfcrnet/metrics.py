"""Confusion matrix and macro-averaged evaluation metrics.

Rows are true classes, columns are predicted classes. Macro values are
unweighted class means; a class with no predictions has undefined precision
and counts as 0 in the macro mean (flagged in the report), and the same
convention applies to recall for a class absent from the truths.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # [K, K] int64

    @classmethod
    def empty(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accumulate(self, truths, predictions) -> "ConfusionMatrix":
        """Count (truth, prediction) pairs in place; order-independent."""
        truths = np.asarray(truths, dtype=np.int64)
        predictions = np.asarray(predictions, dtype=np.int64)
        if truths.shape != predictions.shape:
            raise ValueError("truths and predictions must have the same length")
        k = self.num_classes
        if truths.size and (
            truths.min() < 0 or truths.max() >= k
            or predictions.min() < 0 or predictions.max() >= k
        ):
            raise ValueError(f"labels must lie in [0, {k})")
        np.add.at(self.counts, (truths, predictions), 1)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        """Combine two matrices; equals accumulation over both streams."""
        if other.num_classes != self.num_classes:
            raise ValueError("cannot merge matrices of different sizes")
        self.counts += other.counts
        return self


@dataclass
class MetricsReport:
    oa: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    kappa: float
    per_class_recall: list[float]
    undefined_precision_classes: list[int] = field(default_factory=list)
    undefined_recall_classes: list[int] = field(default_factory=list)
    confusion: list[list[int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "oa": self.oa,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "kappa": self.kappa,
            "per_class_recall": self.per_class_recall,
            "undefined_precision_classes": self.undefined_precision_classes,
            "undefined_recall_classes": self.undefined_recall_classes,
            "confusion": self.confusion,
        }


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Overall accuracy, macro precision/recall/F1, and Cohen's kappa."""
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    k = cm.num_classes
    diag = np.diag(counts)
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)

    oa = float(diag.sum() / total)

    precision = np.zeros(k)
    recall = np.zeros(k)
    undefined_p = []
    undefined_r = []
    for i in range(k):
        if col_sums[i] > 0:
            precision[i] = diag[i] / col_sums[i]
        else:
            undefined_p.append(i)
        if row_sums[i] > 0:
            recall[i] = diag[i] / row_sums[i]
        else:
            undefined_r.append(i)
    f1 = np.zeros(k)
    for i in range(k):
        if precision[i] + recall[i] > 0:
            f1[i] = 2 * precision[i] * recall[i] / (precision[i] + recall[i])

    p_observed = oa
    p_expected = float((row_sums * col_sums).sum() / (total * total))
    if p_expected == 1.0:
        kappa = 1.0 if p_observed == 1.0 else 0.0
    else:
        kappa = (p_observed - p_expected) / (1.0 - p_expected)

    return MetricsReport(
        oa=oa,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        kappa=float(kappa),
        per_class_recall=[float(r) for r in recall],
        undefined_precision_classes=undefined_p,
        undefined_recall_classes=undefined_r,
        confusion=cm.counts.tolist(),
    )
