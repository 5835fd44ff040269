"""Confusion matrices, per-class precision/recall/F1 and model comparison tables."""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labels import LABEL_ORDER, UNPARSED, SentimentLabel, label_from_str

logger = logging.getLogger(__name__)


class EvaluationError(ValueError):
    pass


class MissingPrediction(EvaluationError):
    pass


class DuplicateId(EvaluationError):
    pass


class EmptyMatrix(EvaluationError):
    pass


class LabelSetMismatch(EvaluationError):
    pass


@dataclass
class ConfusionMatrix:
    """Rows are true labels, columns predictions, both in ``labels`` order."""

    counts: np.ndarray
    labels: tuple[SentimentLabel, ...] = LABEL_ORDER
    excluded_unparsed: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def supports(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def cell(self, truth: SentimentLabel, predicted: SentimentLabel) -> int:
        return int(self.counts[self.labels.index(truth), self.labels.index(predicted)])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["truth\\predicted", *(l.value for l in self.labels)])
            for label, row in zip(self.labels, self.counts):
                writer.writerow([label.value, *(int(x) for x in row)])


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int | None = None
    degenerate: bool = False


@dataclass
class MetricsReport:
    per_class: dict[SentimentLabel, ClassScores]
    weighted_f1: float
    name: str = ""
    excluded_unparsed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def labels(self) -> tuple[SentimentLabel, ...]:
        return tuple(self.per_class)

    @classmethod
    def from_table(
        cls,
        name: str,
        rows: Mapping[SentimentLabel | str, Sequence[float]],
        weighted_f1: float,
    ) -> MetricsReport:
        """Wrap externally published (precision, recall, f1) rows verbatim."""
        per_class = {}
        for label, (p, r, f) in rows.items():
            per_class[SentimentLabel(label)] = ClassScores(float(p), float(r), float(f))
        ordered = {l: per_class[l] for l in LABEL_ORDER if l in per_class}
        return cls(ordered, float(weighted_f1), name=name)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["label", "precision", "recall", "f1", "support"])
            for label, s in self.per_class.items():
                writer.writerow(
                    [label.value, f"{s.precision:.4f}", f"{s.recall:.4f}", f"{s.f1:.4f}",
                     "" if s.support is None else s.support]
                )
            writer.writerow(["weighted", "", "", f"{self.weighted_f1:.4f}", ""])


def confusion_matrix(
    truth: Iterable[tuple[str, SentimentLabel]],
    predicted: Iterable[tuple[str, object]],
    labels: tuple[SentimentLabel, ...] = LABEL_ORDER,
) -> ConfusionMatrix:
    """Count (truth, prediction) pairs by id.

    Unparsed predictions are left out of the matrix and counted in
    ``excluded_unparsed``. Predictions for ids absent from ``truth`` are ignored.
    """
    truth_map: dict[str, SentimentLabel] = {}
    for wid, label in truth:
        if wid in truth_map:
            raise DuplicateId(f"truth id {wid!r} appears twice")
        truth_map[wid] = label
    pred_map: dict[str, object] = {}
    for wid, label in predicted:
        if wid in pred_map:
            raise DuplicateId(f"prediction id {wid!r} appears twice")
        pred_map[wid] = label

    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    unparsed = 0
    for wid, t in truth_map.items():
        if wid not in pred_map:
            raise MissingPrediction(wid)
        p = pred_map[wid]
        if p is UNPARSED:
            unparsed += 1
            continue
        counts[index[t], index[p]] += 1
    if unparsed:
        logger.warning("excluded %d unparsed predictions from the confusion matrix", unparsed)
    return ConfusionMatrix(counts, labels, excluded_unparsed=unparsed)


def _ratio(num: float, den: float) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


def precision_recall_f1(m: ConfusionMatrix, name: str = "") -> MetricsReport:
    """Per-class scores; an empty denominator gives 0 and marks the class degenerate."""
    if m.total == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    diag = np.diag(m.counts)
    col = m.counts.sum(axis=0)
    row = m.counts.sum(axis=1)
    per_class = {}
    for i, label in enumerate(m.labels):
        p, p_deg = _ratio(diag[i], col[i])
        r, r_deg = _ratio(diag[i], row[i])
        f = 2 * p * r / (p + r) if p + r else 0.0
        per_class[label] = ClassScores(float(p), float(r), float(f), int(row[i]), p_deg or r_deg)
    return MetricsReport(per_class, _weighted(per_class, row), name=name, excluded_unparsed=m.excluded_unparsed)


def _weighted(per_class: Mapping[SentimentLabel, ClassScores], supports: np.ndarray) -> float:
    f1 = np.array([s.f1 for s in per_class.values()])
    return float((supports * f1).sum() / supports.sum())


def weighted_f1(m: ConfusionMatrix) -> float:
    """Support-weighted mean of per-class F1, supports being the row sums."""
    return precision_recall_f1(m).weighted_f1


@dataclass
class ComparisonTable:
    models: list[str]
    labels: tuple[SentimentLabel, ...]
    # cells[label][model] = (precision, recall, f1)
    cells: dict[SentimentLabel, dict[str, tuple[float, float, float]]]
    weighted: dict[str, float]
    # best[label][metric_index] = model names achieving the max
    best: dict[SentimentLabel, tuple[tuple[str, ...], ...]]
    best_weighted: tuple[str, ...]
    # deltas[model][label] = (dp, dr, df) relative to models[0]
    deltas: dict[str, dict[SentimentLabel, tuple[float, float, float]]]
    weighted_delta: dict[str, float]

    def rows(self) -> list[list[str]]:
        header = ["label"]
        for model in self.models:
            header += [f"{model} precision", f"{model} recall", f"{model} f1"]
        out = [header]
        for label in self.labels:
            row = [label.title]
            for model in self.models:
                row += [f"{x:.4f}" for x in self.cells[label][model]]
            out.append(row)
        wrow = ["Weighted F1"]
        for model in self.models:
            wrow += ["", "", f"{self.weighted[model]:.4f}"]
        out.append(wrow)
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            csv.writer(handle).writerows(self.rows())

    def to_text(self) -> str:
        """Aligned text layout: one column group per model, best cell starred."""
        metrics = ("Precision", "Recall", "F1-score")
        width = 10
        lines = []
        group = "".ljust(12) + "".join(f"| {m}".ljust(3 * width + 2) for m in self.models)
        lines.append(group.rstrip())
        head = "Metric>".ljust(12) + "".join("| " + "".join(x.ljust(width) for x in metrics) for _ in self.models)
        lines.append(head.rstrip())
        lines.append("-" * len(head.rstrip()))
        for label in self.labels:
            line = label.title.ljust(12)
            for model in self.models:
                vals = self.cells[label][model]
                cells = []
                for k, v in enumerate(vals):
                    mark = "*" if len(self.models) > 1 and model in self.best[label][k] else " "
                    cells.append(f"{v:.4f}{mark}".ljust(width))
                line += "| " + "".join(cells)
            lines.append(line.rstrip())
        lines.append("-" * len(head.rstrip()))
        line = "Weighted F1".ljust(12)
        for model in self.models:
            mark = "*" if len(self.models) > 1 and model in self.best_weighted else " "
            line += "| " + "".ljust(2 * width) + f"{self.weighted[model]:.4f}{mark}".ljust(width)
        lines.append(line.rstrip())
        return "\n".join(lines) + "\n"


def compare_models(reports: Sequence[MetricsReport] | Mapping[str, MetricsReport]) -> ComparisonTable:
    """Side-by-side metrics for two or more models over one label set."""
    if isinstance(reports, Mapping):
        named = list(reports.items())
    else:
        named = [(r.name or f"model{i + 1}", r) for i, r in enumerate(reports)]
    if len(named) < 2:
        raise ValueError("compare_models needs at least two reports")
    labels = named[0][1].labels
    for name, rep in named[1:]:
        if set(rep.labels) != set(labels):
            raise LabelSetMismatch(f"{name} covers {sorted(l.value for l in rep.labels)}")
    models = [name for name, _ in named]
    if len(set(models)) != len(models):
        raise ValueError("model names must be unique")

    cells = {
        label: {name: (rep.per_class[label].precision, rep.per_class[label].recall, rep.per_class[label].f1)
                for name, rep in named}
        for label in labels
    }
    weighted = {name: rep.weighted_f1 for name, rep in named}
    best = {}
    for label in labels:
        per_metric = []
        for k in range(3):
            top = max(cells[label][m][k] for m in models)
            per_metric.append(tuple(m for m in models if cells[label][m][k] == top))
        best[label] = tuple(per_metric)
    top_w = max(weighted.values())
    ref = models[0]
    deltas = {
        m: {label: tuple(a - b for a, b in zip(cells[label][m], cells[label][ref])) for label in labels}
        for m in models
    }
    return ComparisonTable(
        models=models,
        labels=labels,
        cells=cells,
        weighted=weighted,
        best=best,
        best_weighted=tuple(m for m in models if weighted[m] == top_w),
        deltas=deltas,
        weighted_delta={m: weighted[m] - weighted[ref] for m in models},
    )


def read_label_csv(path: str | Path, allow_unparsed: bool = False) -> list[tuple[str, object]]:
    """Read ``id,label`` rows (a header row naming ``id`` is optional)."""
    out = []
    with open(path, newline="", encoding="utf-8") as handle:
        for line_no, row in enumerate(csv.reader(handle), 1):
            if not row or not any(cell.strip() for cell in row):
                continue
            if line_no == 1 and row[0].strip().lower() in ("id", "weibo_id"):
                continue
            if len(row) < 2:
                raise EvaluationError(f"{path}:{line_no}: expected id,label")
            try:
                label = label_from_str(row[1])
            except ValueError:
                raise EvaluationError(f"{path}:{line_no}: unknown label {row[1]!r}") from None
            if label is UNPARSED and not allow_unparsed:
                raise EvaluationError(f"{path}:{line_no}: ground truth cannot be unparsed")
            out.append((row[0].strip(), label))
    return out
