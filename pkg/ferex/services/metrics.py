"""
Evaluation: predictions, confusion matrix and the text classification report.

Confusion-matrix rows are true labels and columns are predicted labels, both
in ClassLabel order (negative, neutral, positive).
"""

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ferex.config import settings
from ferex.core.network import Parameters, predict_proba
from ferex.core.tensor import Tensor
from ferex.errors import DataValidationError
from ferex.models.schemas import CLASS_LABELS, CLASS_SLUGS, ClassLabel, ModelConfig
from ferex.services.artifacts import atomic_write_text

logger = logging.getLogger(__name__)

NUM_CLASSES = len(CLASS_LABELS)
CONFUSION_HEADER = ["true\\predicted", *CLASS_SLUGS]


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # int64 [3, 3], rows = true, columns = predicted

    def __post_init__(self):
        if self.counts.shape != (NUM_CLASSES, NUM_CLASSES) or np.any(self.counts < 0):
            raise DataValidationError(
                f"confusion counts must be a non-negative {NUM_CLASSES}x{NUM_CLASSES} matrix"
            )

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def empty_rows(self) -> list[ClassLabel]:
        return [label for label in CLASS_LABELS if self.row_totals[label] == 0]

    def normalized(self) -> np.ndarray:
        """Row-normalised view (per-true-class fractions); all-zero rows stay zero."""
        totals = self.row_totals.astype(np.float64)[:, None]
        return np.divide(
            self.counts.astype(np.float64),
            totals,
            out=np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.float64),
            where=totals > 0,
        )


@dataclass(frozen=True)
class EvalReport:
    overall_accuracy: float
    per_class_recall: tuple[float, float, float]
    confusion: ConfusionMatrix
    n: int

    @property
    def beats_chance(self) -> bool:
        """Every class recall strictly above uniform guessing (1/3)."""
        return all(r > settings.CHANCE_ACCURACY for r in self.per_class_recall)


def argmax_labels(logits: Tensor) -> list[ClassLabel]:
    # np.argmax returns the first maximum, so ties go to the lowest class index
    return [ClassLabel(int(i)) for i in np.argmax(logits, axis=1)]


def predict(
    params: Parameters, config: ModelConfig, images: Tensor, batch_size: int = 64
) -> list[ClassLabel]:
    logits, _ = predict_proba(config, params, images, batch_size=batch_size)
    return argmax_labels(logits)


def evaluate(predictions, labels) -> EvalReport:
    preds = np.asarray([int(p) for p in predictions], dtype=np.int64)
    truth = np.asarray([int(t) for t in labels], dtype=np.int64)
    if preds.shape != truth.shape:
        raise DataValidationError(
            f"got {len(preds)} predictions for {len(truth)} labels"
        )
    if preds.size == 0:
        raise DataValidationError("cannot evaluate an empty prediction list")
    for name, values in (("prediction", preds), ("label", truth)):
        if np.any(values < 0) or np.any(values >= NUM_CLASSES):
            raise DataValidationError(f"{name} outside [0, {NUM_CLASSES - 1}]")

    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (truth, preds), 1)
    confusion = ConfusionMatrix(counts=counts)
    n = int(preds.size)
    diag = np.diag(counts)
    rows = confusion.row_totals
    recall = tuple(float(diag[c] / rows[c]) if rows[c] else 0.0 for c in range(NUM_CLASSES))
    return EvalReport(
        overall_accuracy=float(diag.sum() / n),
        per_class_recall=recall,
        confusion=confusion,
        n=n,
    )


def report_from_confusion(confusion: ConfusionMatrix) -> EvalReport:
    counts = confusion.counts
    n = confusion.total
    if n == 0:
        raise DataValidationError("confusion matrix holds no observations")
    rows = confusion.row_totals
    recall = tuple(float(counts[c, c] / rows[c]) if rows[c] else 0.0 for c in range(NUM_CLASSES))
    return EvalReport(
        overall_accuracy=float(np.trace(counts) / n),
        per_class_recall=recall,
        confusion=confusion,
        n=n,
    )


def render_report(report: EvalReport, title: str | None = None) -> str:
    """Fixed-format text report: overall accuracy, per-class recall, normalised matrix."""
    rows = report.confusion.row_totals
    norm = report.confusion.normalized()
    lines = []
    if title:
        lines.append(f"== {title} ==")
    lines.append(f"overall accuracy: {report.overall_accuracy * 100:.1f}%")
    lines.append(f"examples: {report.n}")
    lines.append("per-class recall:")
    for label in CLASS_LABELS:
        lines.append(
            f"  {label.slug:<9}{report.per_class_recall[label] * 100:6.1f}%  (n={int(rows[label])})"
        )
    lines.append("confusion matrix (rows = true label, columns = predicted, row-normalized):")
    lines.append(" " * 11 + "".join(f"{slug:>10}" for slug in CLASS_SLUGS))
    for label in CLASS_LABELS:
        cells = "".join(f"{norm[label, c]:>10.2f}" for c in range(NUM_CLASSES))
        suffix = "  (n=0)" if rows[label] == 0 else ""
        lines.append(f"  {label.slug:<9}{cells}{suffix}")
    verdict = "yes" if report.beats_chance else "no"
    lines.append(
        f"better than chance ({settings.CHANCE_ACCURACY * 100:.1f}%) for every class: {verdict}"
    )
    return "\n".join(lines) + "\n"


def confusion_to_csv(confusion: ConfusionMatrix) -> str:
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CONFUSION_HEADER)
    for label in CLASS_LABELS:
        writer.writerow([label.slug, *(int(v) for v in confusion.counts[label])])
    return buffer.getvalue()


def write_confusion_csv(confusion: ConfusionMatrix, path: Path) -> None:
    atomic_write_text(Path(path), confusion_to_csv(confusion))
    logger.info("[Metrics] Wrote confusion matrix to %s", path)


def read_confusion_csv(path: Path) -> ConfusionMatrix:
    with Path(path).open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != CONFUSION_HEADER or len(rows) != NUM_CLASSES + 1:
        raise DataValidationError(f"{path}: not a confusion matrix CSV")
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    for row in rows[1:]:
        try:
            label = ClassLabel.from_slug(row[0])
            counts[label] = [int(v) for v in row[1:]]
        except (KeyError, ValueError):
            raise DataValidationError(f"{path}: malformed row {row}")
    return ConfusionMatrix(counts=counts)
