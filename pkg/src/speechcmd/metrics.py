"""Multiclass evaluation: confusion matrix, one-vs-rest metrics, reports.

Every derived metric comes from the same four counts. For class c:

  TP = cm[c][c]            FN = row c minus TP
  FP = column c minus TP   TN = everything else

  accuracy    (TP+TN)/(TP+TN+FP+FN)
  precision   TP/(TP+FP)
  recall      TP/(TP+FN)
  specificity TN/(TN+FP)
  f1          2*precision*recall/(precision+recall)

A zero denominator yields 0.0 and a note in the report flags, never a NaN.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInputError

SVG_HASH_SALT = "speechcmd"  # pins the ids matplotlib generates inside SVGs


@dataclass(frozen=True)
class BinaryCounts:
    """One-vs-rest confusion counts for a single class."""

    tp: int
    fp: int
    fn: int
    tn: int


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise InvalidInputError(f"label vectors must match: {y_true.shape} vs {y_pred.shape}")
    for name, v in (("true", y_true), ("predicted", y_pred)):
        if len(v) and (v.min() < 0 or v.max() >= n_classes):
            raise InvalidInputError(f"{name} labels must lie in [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def one_vs_rest(cm: np.ndarray) -> list[BinaryCounts]:
    cm = _check_square(cm)
    total = int(cm.sum())
    out = []
    for c in range(cm.shape[0]):
        tp = int(cm[c, c])
        fp = int(cm[:, c].sum()) - tp
        fn = int(cm[c, :].sum()) - tp
        out.append(BinaryCounts(tp=tp, fp=fp, fn=fn, tn=total - tp - fp - fn))
    return out


@dataclass
class MetricsReport:
    confusion: np.ndarray
    class_names: list[str]
    per_class: dict[str, list[float]]  # metric name -> value per class
    macro: dict[str, float]
    micro: dict[str, float]
    overall_accuracy: float
    flags: list[str] = field(default_factory=list)

    METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "f1")

    def as_rows(self) -> list[tuple[str, str, float]]:
        """Flat (metric, name, value) rows, the layout metrics.csv uses."""
        rows = [("accuracy", "overall", self.overall_accuracy)]
        for m in self.METRIC_NAMES:
            rows.extend((m, self.class_names[c], v) for c, v in enumerate(self.per_class[m]))
        rows.extend(("macro_" + m, "all", self.macro[m]) for m in self.METRIC_NAMES)
        rows.extend(("micro_" + m, "all", self.micro[m]) for m in self.METRIC_NAMES)
        return rows


def _div(num: float, den: float, flags: list[str], what: str) -> float:
    if den == 0:
        flags.append(f"{what}: zero denominator, reported 0")
        return 0.0
    return num / den


def _metric_set(counts: BinaryCounts, flags: list[str], tag: str) -> dict[str, float]:
    tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
    precision = _div(tp, tp + fp, flags, f"precision[{tag}]")
    recall = _div(tp, tp + fn, flags, f"recall[{tag}]")
    return {
        "accuracy": _div(tp + tn, tp + tn + fp + fn, flags, f"accuracy[{tag}]"),
        "precision": precision,
        "recall": recall,
        "specificity": _div(tn, tn + fp, flags, f"specificity[{tag}]"),
        "f1": _div(2.0 * precision * recall, precision + recall, flags, f"f1[{tag}]"),
    }


def summarize(cm: np.ndarray, class_names: list[str] | None = None) -> MetricsReport:
    """Full metric table from a confusion matrix.

    Macro values average the per-class metrics without weighting; micro
    values pool the one-vs-rest counts across classes first.
    """
    cm = _check_square(cm)
    n = cm.shape[0]
    if class_names is None:
        class_names = [str(c) for c in range(n)]
    if len(class_names) != n:
        raise InvalidInputError(f"{len(class_names)} names for {n} classes")

    flags: list[str] = []
    counts = one_vs_rest(cm)
    per_class = {m: [] for m in MetricsReport.METRIC_NAMES}
    for c, bc in enumerate(counts):
        for m, v in _metric_set(bc, flags, class_names[c]).items():
            per_class[m].append(v)

    macro = {m: float(np.mean(per_class[m])) for m in MetricsReport.METRIC_NAMES}
    pooled = BinaryCounts(
        tp=sum(b.tp for b in counts),
        fp=sum(b.fp for b in counts),
        fn=sum(b.fn for b in counts),
        tn=sum(b.tn for b in counts),
    )
    micro = _metric_set(pooled, flags, "micro")
    overall = _div(float(np.trace(cm)), float(cm.sum()), flags, "overall accuracy")

    return MetricsReport(
        confusion=cm,
        class_names=list(class_names),
        per_class=per_class,
        macro=macro,
        micro=micro,
        overall_accuracy=overall,
        flags=flags,
    )


def per_class_accuracy(cm: np.ndarray, class_names: list[str] | None = None) -> dict[str, float]:
    """Diagonal of the row-normalized matrix; classes with no examples are
    left out (they have no defined accuracy)."""
    cm = _check_square(cm)
    names = class_names or [str(c) for c in range(cm.shape[0])]
    out = {}
    for c in range(cm.shape[0]):
        row = cm[c, :].sum()
        if row > 0:
            out[names[c]] = float(cm[c, c] / row)
    return out


def _check_square(cm) -> np.ndarray:
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise InvalidInputError(f"confusion matrix must be square, got shape {cm.shape}")
    if cm.size and cm.min() < 0:
        raise InvalidInputError("confusion counts cannot be negative")
    return cm.astype(np.int64)


def write_metrics_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "name", "value"])
        for metric, name, value in report.as_rows():
            w.writerow([metric, name, f"{value:.6f}"])


def write_confusion_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["true\\pred"] + report.class_names)
        for c, name in enumerate(report.class_names):
            w.writerow([name] + [int(v) for v in report.confusion[c]])


def read_confusion_csv(path) -> tuple[np.ndarray, list[str]]:
    """Inverse of write_confusion_csv: (matrix, class names)."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:1] != ["true\\pred"]:
        raise FormatError(f"not a confusion CSV: {path}")
    names = rows[0][1:]
    n = len(names)
    if len(rows) != n + 1:
        raise FormatError(f"expected {n} matrix rows, found {len(rows) - 1}")
    cm = np.zeros((n, n), dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        if len(row) != n + 1 or row[0] != names[i]:
            raise FormatError(f"malformed confusion row {i}: {row[:2]}")
        try:
            cm[i] = [int(v) for v in row[1:]]
        except ValueError as exc:
            raise FormatError(f"non-integer count in confusion row {i}: {exc}") from exc
    return cm, names


def _new_figure(width: float, height: float):
    from matplotlib.figure import Figure

    return Figure(figsize=(width, height), dpi=100)


def _save_svg(fig, path) -> None:
    import matplotlib

    # fixed hash salt + no Date metadata: rerunning writes identical bytes
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def render_curves(history_rows: list[dict], path) -> None:
    """Training curve figure: loss and accuracy per epoch, train and val."""
    epochs = [r["epoch"] for r in history_rows]
    fig = _new_figure(9.0, 3.6)
    ax_loss, ax_acc = fig.subplots(1, 2)
    ax_loss.plot(epochs, [r["train_loss"] for r in history_rows], label="train", marker="o", ms=3)
    ax_loss.plot(epochs, [r["val_loss"] for r in history_rows], label="val", marker="s", ms=3)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy")
    ax_loss.legend()
    ax_acc.plot(epochs, [r["train_acc"] for r in history_rows], label="train", marker="o", ms=3)
    ax_acc.plot(epochs, [r["val_acc"] for r in history_rows], label="val", marker="s", ms=3)
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.0)
    ax_acc.legend()
    fig.tight_layout()
    _save_svg(fig, path)


def render_confusion(report: MetricsReport, path) -> None:
    """Row-normalized confusion heatmap with counts in each cell."""
    cm = report.confusion
    rows = cm.sum(axis=1, keepdims=True)
    shares = np.divide(cm, np.maximum(rows, 1), dtype=np.float64)

    n = cm.shape[0]
    fig = _new_figure(0.62 * n + 2.2, 0.62 * n + 1.8)
    ax = fig.subplots()
    im = ax.imshow(shares, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(n), report.class_names, rotation=45, ha="right")
    ax.set_yticks(range(n), report.class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(n):
        for j in range(n):
            if cm[i, j]:
                color = "white" if shares[i, j] > 0.5 else "black"
                ax.text(j, i, str(int(cm[i, j])), ha="center", va="center", fontsize=7, color=color)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    _save_svg(fig, path)


def render_report(report: MetricsReport, out_dir, history_rows: list[dict] | None = None) -> dict[str, Path]:
    """Write metrics.csv, confusion.csv, confusion.svg (and curves.svg when
    a training history is supplied) into out_dir. Returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics_csv": out / "metrics.csv",
        "confusion_csv": out / "confusion.csv",
        "confusion_svg": out / "confusion.svg",
    }
    write_metrics_csv(report, paths["metrics_csv"])
    write_confusion_csv(report, paths["confusion_csv"])
    render_confusion(report, paths["confusion_svg"])
    if history_rows:
        paths["curves_svg"] = out / "curves.svg"
        render_curves(history_rows, paths["curves_svg"])
    return paths
