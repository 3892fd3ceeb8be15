"""
Confusion counts and accuracy / recall / precision / F1 with Rosacea as the
positive class, and rendering of report tables in text, JSON and CSV.

A ratio whose denominator is zero is reported as NaN (n/a in text, null in
JSON, nan in CSV), never as 0.
"""
import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from sklearn.metrics import confusion_matrix

from core.exceptions import EmptySampleSetError, ParameterError
from core.schemas import Label, MetricsRow
from core.services.classifiers import KnnMetric, KnnModel, PcaHead, PcaPipelineModel, predict_batch

UNDEFINED = float("nan")

TEXT_COLUMNS = ("Method", "Accuracy", "Recall", "Precision", "F1")

METHOD_NAMES = {
    "knn-l1": "KNN with L1 metric",
    "knn-l2": "KNN with L2 metric",
    "knn-cos": "KNN with cosine metric",
    "pca-knn": "KNN-L2 after PCA",
    "pca-mean": "Class independent PCA",
    "whitened-cosine": "Whitened cosine similarity",
}


def method_key(model) -> str:
    """Baseline key of a trained model, as accepted by `manage.py baseline --method`."""
    if isinstance(model, KnnModel):
        return {KnnMetric.L1: "knn-l1", KnnMetric.L2: "knn-l2", KnnMetric.COSINE: "knn-cos"}[model.metric]
    if isinstance(model, PcaPipelineModel):
        return "pca-knn" if model.head == PcaHead.KNN_L2 else "pca-mean"
    return "whitened-cosine"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            tn=self.tn + other.tn,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class MetricsReport:
    method_name: str
    accuracy: float
    recall: float
    precision: float
    f1: float
    counts: ConfusionMatrix


def confusion(pairs) -> ConfusionMatrix:
    """pairs: iterable of (predicted label, true label)."""
    pairs = list(pairs)
    if not pairs:
        raise EmptySampleSetError("no predictions to evaluate")
    predicted = [Label(p) for p, _ in pairs]
    truth = [Label(t) for _, t in pairs]
    tn, fp, fn, tp = confusion_matrix(truth, predicted, labels=[Label.NORMAL, Label.ROSACEA]).ravel()
    return ConfusionMatrix(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))


def _ratio(numerator: int, denominator: int) -> Fraction | None:
    if denominator == 0:
        return None
    return Fraction(numerator, denominator)


def _as_float(value: Fraction | None) -> float:
    return UNDEFINED if value is None else float(value)


def metrics(cm: ConfusionMatrix, method_name: str = METHOD_NAMES["whitened-cosine"]) -> MetricsReport:
    if cm.total <= 0:
        raise EmptySampleSetError("confusion matrix is empty")
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    f1 = None
    if recall is not None and precision is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(
        method_name=method_name,
        accuracy=_as_float(accuracy),
        recall=_as_float(recall),
        precision=_as_float(precision),
        f1=_as_float(f1),
        counts=cm,
    )


def _rounded(value: float, places: int) -> float | None:
    return None if math.isnan(value) else round(value, places)


def to_row(report: MetricsReport) -> MetricsRow:
    return MetricsRow(
        method=report.method_name,
        accuracy=_rounded(report.accuracy, 4),
        recall=_rounded(report.recall, 4),
        precision=_rounded(report.precision, 4),
        f1=_rounded(report.f1, 4),
        tp=report.counts.tp,
        tn=report.counts.tn,
        fp=report.counts.fp,
        fn=report.counts.fn,
    )


def _fixed(value: float, places: int, undefined: str) -> str:
    return undefined if math.isnan(value) else f"{value:.{places}f}"


def _render_text(reports) -> str:
    rows = [TEXT_COLUMNS] + [
        (
            report.method_name,
            _fixed(report.accuracy, 2, "n/a"),
            _fixed(report.recall, 2, "n/a"),
            _fixed(report.precision, 2, "n/a"),
            _fixed(report.f1, 2, "n/a"),
        )
        for report in reports
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(TEXT_COLUMNS))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [cell.rjust(width) for cell, width in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _render_json(reports) -> str:
    return json.dumps([to_row(report).model_dump() for report in reports], indent=2) + "\n"


def _render_csv(reports) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(MetricsRow.model_fields))
    for report in reports:
        writer.writerow([
            report.method_name,
            _fixed(report.accuracy, 4, "nan"),
            _fixed(report.recall, 4, "nan"),
            _fixed(report.precision, 4, "nan"),
            _fixed(report.f1, 4, "nan"),
            report.counts.tp,
            report.counts.tn,
            report.counts.fp,
            report.counts.fn,
        ])
    return buffer.getvalue()


RENDERERS = {
    "text": _render_text,
    "json": _render_json,
    "csv": _render_csv,
}


def render_report(reports, format: str = "text") -> str:
    """Rows keep input order; text shows 2 decimals, JSON and CSV 4."""
    reports = list(reports)
    if not reports:
        raise EmptySampleSetError("no reports to render")
    try:
        renderer = RENDERERS[format]
    except KeyError:
        raise ParameterError(f"unknown report format: {format}") from None
    return renderer(reports)


def evaluate_model(model, x_normal, x_rosacea, method_name: str, **predict_options) -> MetricsReport:
    """Predict every test column of both classes and score the result; per-class counts are summed."""
    counts = None
    for truth, columns in ((Label.NORMAL, x_normal), (Label.ROSACEA, x_rosacea)):
        predictions = predict_batch(model, columns, **predict_options)
        part = confusion((prediction.label, truth) for prediction in predictions)
        counts = part if counts is None else counts + part
    return metrics(counts, method_name=method_name)
