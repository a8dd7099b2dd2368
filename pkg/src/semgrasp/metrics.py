"""Classification metrics and run reports.

Conventions: confusion rows are true classes, columns are predictions;
precision/recall with an empty denominator are reported as 0 alongside a
MetricsWarning; weighted F1 weights per-class F1 by true-class support.
"Model accuracy" is the test accuracy of the last epoch, "max accuracy" the
peak across epochs (1-based epoch index), "average accuracy" the mean over
epochs.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import LABEL_TO_INDEX, LABELS
from .errors import DataError


class MetricsWarning(UserWarning):
    """Signals a zero-denominator precision or recall."""


class EpochStats(NamedTuple):
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float


def _to_index(label) -> int:
    if isinstance(label, str):
        try:
            return LABEL_TO_INDEX[label]
        except KeyError:
            raise DataError(f"unknown label {label!r}") from None
    return int(label)


def confusion_matrix(truths: Sequence, preds: Sequence, n_classes: int = len(LABELS)) -> np.ndarray:
    """counts[t][p] = number of samples with true class t predicted as p.

    Accepts label characters or class indices.
    """
    if len(truths) != len(preds):
        raise DataError(f"length mismatch: {len(truths)} truths vs {len(preds)} predictions")
    if len(truths) == 0:
        raise DataError("cannot build a confusion matrix from zero samples")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(truths, preds):
        ti, pi = _to_index(t), _to_index(p)
        if not (0 <= ti < n_classes and 0 <= pi < n_classes):
            raise DataError(f"class index out of range: true={ti}, pred={pi}")
        cm[ti, pi] += 1
    return cm


def accuracy_from_cm(cm: np.ndarray) -> float:
    return float(np.trace(cm)) / float(cm.sum())


def precision_recall(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-class precision (column-wise) and recall (row-wise).

    Zero denominators yield 0 and a MetricsWarning.
    """
    cm = np.asarray(cm)
    n = cm.shape[0]
    precision = np.zeros(n)
    recall = np.zeros(n)
    col_sums = cm.sum(axis=0)
    row_sums = cm.sum(axis=1)
    for k in range(n):
        if col_sums[k] == 0:
            warnings.warn(f"class {k} never predicted; precision set to 0", MetricsWarning)
        else:
            precision[k] = cm[k, k] / col_sums[k]
        if row_sums[k] == 0:
            warnings.warn(f"class {k} has no true samples; recall set to 0", MetricsWarning)
        else:
            recall[k] = cm[k, k] / row_sums[k]
    return precision, recall


def _per_class_f1(cm: np.ndarray) -> np.ndarray:
    precision, recall = precision_recall(cm)
    f1 = np.zeros(len(precision))
    nz = (precision + recall) > 0
    f1[nz] = 2.0 * precision[nz] * recall[nz] / (precision[nz] + recall[nz])
    return f1


def f1_weighted(cm: np.ndarray) -> float:
    """Per-class F1 averaged with true-class supports as weights."""
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise DataError("confusion matrix holds no samples")
    supports = cm.sum(axis=1)
    return float((supports * _per_class_f1(cm)).sum() / total)


def f1_macro(cm: np.ndarray) -> float:
    return float(_per_class_f1(cm).mean())


@dataclass(eq=False)
class EvalReport:
    confusion: np.ndarray
    accuracy: float
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    f1_weighted: float
    f1_macro: float
    epoch_log: list[EpochStats]
    model_accuracy: float
    max_accuracy: float
    max_accuracy_epoch: int  # 1-based
    average_accuracy: float


def summarize(epoch_log: list[EpochStats], final_confusion: np.ndarray) -> EvalReport:
    """Collapse an epoch log plus the final test confusion into a report."""
    if not epoch_log:
        raise DataError("epoch log is empty")
    test_accs = np.array([e.test_acc for e in epoch_log])
    best = int(np.argmax(test_accs))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MetricsWarning)
        precision, recall = precision_recall(final_confusion)
        f1w = f1_weighted(final_confusion)
        f1m = f1_macro(final_confusion)
    return EvalReport(
        confusion=np.asarray(final_confusion),
        accuracy=accuracy_from_cm(final_confusion),
        per_class_precision=precision,
        per_class_recall=recall,
        f1_weighted=f1w,
        f1_macro=f1m,
        epoch_log=list(epoch_log),
        model_accuracy=float(test_accs[-1]),
        max_accuracy=float(test_accs[best]),
        max_accuracy_epoch=best + 1,
        average_accuracy=float(test_accs.mean()),
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def write_report(outdir: str | Path, report: EvalReport, extras: dict | None = None) -> None:
    """Write epochs.csv, confusion.csv, summary.csv and summary.txt.

    extras (e.g. a reference accuracy to compare against) are appended as
    additional summary columns; a reference_accuracy extra also produces a
    gap_to_reference column.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    with open(outdir / "epochs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "test_loss", "test_acc"])
        for i, e in enumerate(report.epoch_log, start=1):
            writer.writerow(
                [i, _fmt(e.train_loss), _fmt(e.train_acc), _fmt(e.test_loss), _fmt(e.test_acc)]
            )

    _write_confusion(outdir / "confusion.csv", report.confusion)

    columns = {
        "model_accuracy": _fmt(report.model_accuracy),
        "max_accuracy": _fmt(report.max_accuracy),
        "max_accuracy_epoch": str(report.max_accuracy_epoch),
        "average_accuracy": _fmt(report.average_accuracy),
        "f1_weighted": _fmt(report.f1_weighted),
        "f1_macro": _fmt(report.f1_macro),
    }
    extras = dict(extras or {})
    ref = extras.get("reference_accuracy")
    if ref is not None:
        extras["gap_to_reference"] = ref - report.model_accuracy
    for key, value in extras.items():
        columns[key] = _fmt(value) if isinstance(value, float) else str(value)
    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(columns))
        writer.writerow(list(columns.values()))

    with open(outdir / "summary.txt", "w") as fh:
        fh.write(format_report(report, extras))


def format_report(report: EvalReport, extras: dict | None = None) -> str:
    lines = [
        f"samples evaluated:  {int(report.confusion.sum())}",
        f"model accuracy:     {report.model_accuracy:.6f}",
        f"max accuracy:       {report.max_accuracy:.6f} (epoch {report.max_accuracy_epoch})",
        f"average accuracy:   {report.average_accuracy:.6f}",
        f"weighted F1:        {report.f1_weighted:.6f}",
        f"macro F1:           {report.f1_macro:.6f}",
    ]
    extras = extras or {}
    ref = extras.get("reference_accuracy")
    if ref is not None:
        lines.append(f"reference accuracy: {ref:.6f}")
        lines.append(f"gap to reference:   {ref - report.model_accuracy:+.6f}")
    prec = " ".join(f"{LABELS[k]}={v:.4f}" for k, v in enumerate(report.per_class_precision))
    rec = " ".join(f"{LABELS[k]}={v:.4f}" for k, v in enumerate(report.per_class_recall))
    lines.append(f"precision per class: {prec}")
    lines.append(f"recall per class:    {rec}")
    lines.append("confusion matrix (rows=true, cols=predicted):")
    header = "      " + " ".join(f"{lab:>5}" for lab in LABELS)
    lines.append(header)
    for k, row in enumerate(report.confusion):
        lines.append(f"{LABELS[k]:>5} " + " ".join(f"{int(v):>5}" for v in row))
    return "\n".join(lines) + "\n"


def _write_confusion(path: Path, cm: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(cm):
            writer.writerow([int(v) for v in row])


def read_confusion(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[int(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path}: empty confusion matrix")
    return np.array(rows, dtype=np.int64)


def read_epoch_log(path: str | Path) -> list[EpochStats]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["epoch", "train_loss", "train_acc", "test_loss", "test_acc"]:
            raise DataError(f"{path}:1: malformed epochs header")
        log = [
            EpochStats(float(r[1]), float(r[2]), float(r[3]), float(r[4]))
            for r in reader
            if r
        ]
    if not log:
        raise DataError(f"{path}: no epochs recorded")
    return log


def read_report(outdir: str | Path) -> EvalReport:
    """Rebuild an EvalReport from a run directory written by write_report."""
    outdir = Path(outdir)
    log = read_epoch_log(outdir / "epochs.csv")
    cm = read_confusion(outdir / "confusion.csv")
    return summarize(log, cm)
