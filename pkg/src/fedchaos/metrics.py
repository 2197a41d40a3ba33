"""Classification metrics and the per-participant experiment table.

The table mirrors one row per participant plus an "avg" row, with pre- and
post-federation accuracy/F1 columns for each privacy mode. Exports are
lossless: floats are written with repr (shortest roundtrip), so a reload
compares equal; the 4-decimal view is only for printed reports.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DimensionError, DomainError, FormatError
from .nn import ModelParams, forward

MODES = ("plain", "dp", "chaos")
COLUMNS = (
    "participant",
    "size_frac",
    "pos_rate",
    "acc_pre_plain",
    "acc_post_plain",
    "f1_pre_plain",
    "f1_post_plain",
    "acc_pre_dp",
    "acc_post_dp",
    "f1_pre_dp",
    "f1_post_dp",
    "acc_pre_chaos",
    "acc_post_chaos",
    "f1_pre_chaos",
    "f1_post_chaos",
)
METRIC_COLUMNS = COLUMNS[1:]


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1: float
    n_test: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise DomainError(f"accuracy={self.accuracy}: must lie in [0, 1]")
        if not 0.0 <= self.f1 <= 1.0:
            raise DomainError(f"f1={self.f1}: must lie in [0, 1]")
        if self.n_test < 1:
            raise DomainError(f"n_test={self.n_test}: must be >= 1")


def classify(probabilities, threshold: float = 0.5) -> np.ndarray:
    """Hard labels: 1 where p >= threshold."""
    p = np.asarray(probabilities, dtype=np.float64)
    return (p >= threshold).astype(np.float64)


def _check_pair(pred, true) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(true, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionError(f"label vectors differ in shape: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise DomainError("empty label vectors")
    return p, t


def accuracy(pred_labels, true_labels) -> float:
    p, t = _check_pair(pred_labels, true_labels)
    return float(np.mean(p == t))


def f1(pred_labels, true_labels) -> float:
    """Positive-class F1 = 2TP/(2TP+FP+FN); 0 when the denominator is 0."""
    p, t = _check_pair(pred_labels, true_labels)
    tp = float(np.sum((p == 1.0) & (t == 1.0)))
    fp = float(np.sum((p == 1.0) & (t == 0.0)))
    fn = float(np.sum((p == 0.0) & (t == 1.0)))
    denom = 2.0 * tp + fp + fn
    if denom == 0.0:
        return 0.0
    return 2.0 * tp / denom


def evaluate_model(params: ModelParams, features, labels, threshold: float = 0.5) -> Metrics:
    """Eval-mode forward, then accuracy and F1 at the given threshold."""
    probs, _ = forward(params, features, mode="eval")
    pred = classify(probs, threshold)
    y = np.asarray(labels, dtype=np.float64)
    return Metrics(accuracy=accuracy(pred, y), f1=f1(pred, y), n_test=int(y.size))


@dataclass
class ExperimentTable:
    """rows: one dict per participant keyed by COLUMNS; avg_row: column means.

    Cells for modes that did not run are None. The participant cell is a
    string ("0", "1", ..., "avg") so file roundtrips compare equal.
    """

    rows: list[dict] = field(default_factory=list)
    avg_row: dict = field(default_factory=dict)


def _column_mean(rows: list[dict], col: str):
    vals = [r[col] for r in rows if r[col] is not None]
    if not vals:
        return None
    return float(np.mean(vals))


def compute_avg_row(rows: list[dict]) -> dict:
    avg = {"participant": "avg"}
    for col in METRIC_COLUMNS:
        avg[col] = _column_mean(rows, col)
    return avg


def build_table(results: dict) -> ExperimentTable:
    """Assemble the table from FederationResults keyed by mode name.

    All modes must describe the same participants (same share sizes and
    label rates); that is what makes the rows comparable.
    """
    if not results:
        raise DomainError("no results to tabulate")
    unknown = set(results) - set(MODES)
    if unknown:
        raise ConsistencyError(f"unknown mode keys: {sorted(unknown)} (expected {MODES})")
    by_mode = {m: results.get(m) for m in MODES}
    reference = next(r for r in by_mode.values() if r is not None)
    n = len(reference.outcomes)
    for mode, res in by_mode.items():
        if res is None:
            continue
        if len(res.outcomes) != n:
            raise ConsistencyError(f"mode {mode}: participant count differs")
        for ours, theirs in zip(reference.outcomes, res.outcomes):
            if ours.size_fraction != theirs.size_fraction or ours.positive_rate != theirs.positive_rate:
                raise ConsistencyError(
                    f"mode {mode}: participant {ours.participant_id} shares differ between modes"
                )

    rows = []
    for i in range(n):
        ref = reference.outcomes[i]
        row = {
            "participant": str(ref.participant_id),
            "size_frac": float(ref.size_fraction),
            "pos_rate": float(ref.positive_rate),
        }
        for mode in MODES:
            res = by_mode[mode]
            out = res.outcomes[i] if res is not None else None
            row[f"acc_pre_{mode}"] = out.pre.accuracy if out else None
            row[f"acc_post_{mode}"] = out.post.accuracy if out else None
            row[f"f1_pre_{mode}"] = out.pre.f1 if out else None
            row[f"f1_post_{mode}"] = out.post.f1 if out else None
        rows.append(row)
    return ExperimentTable(rows=rows, avg_row=compute_avg_row(rows))


def _cell_to_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def _cell_from_text(col: str, text: str):
    if col == "participant":
        return text
    if text == "":
        return None
    return float(text)


def export(table: ExperimentTable, format: str, path) -> None:
    """Write the table as csv or json; reload(export(t)) == t."""
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(COLUMNS)
            for row in table.rows + [table.avg_row]:
                writer.writerow([_cell_to_text(row[c]) for c in COLUMNS])
    elif format == "json":
        with open(path, "w") as fh:
            json.dump({"rows": table.rows, "avg_row": table.avg_row}, fh, indent=2)
            fh.write("\n")
    else:
        raise FormatError(f"unknown export format {format!r} (use csv or json)")


def load_table(path, format: str) -> ExperimentTable:
    if format == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != COLUMNS:
                raise FormatError(f"{path}: unexpected CSV header")
            rows = [
                {c: _cell_from_text(c, cell) for c, cell in zip(COLUMNS, line)}
                for line in reader
                if line
            ]
        if not rows or rows[-1]["participant"] != "avg":
            raise FormatError(f"{path}: missing avg row")
        return ExperimentTable(rows=rows[:-1], avg_row=rows[-1])
    if format == "json":
        with open(path) as fh:
            payload = json.load(fh)
        try:
            return ExperimentTable(rows=payload["rows"], avg_row=payload["avg_row"])
        except (KeyError, TypeError) as e:
            raise FormatError(f"{path}: malformed table JSON ({e})") from e
    raise FormatError(f"unknown table format {format!r} (use csv or json)")


def format_table(table: ExperimentTable, decimals: int = 4) -> str:
    """Human-readable fixed-width view, metrics rounded for display only."""

    def fmt(value) -> str:
        if value is None:
            return "-"
        if isinstance(value, str):
            return value
        return f"{value:.{decimals}f}"

    all_rows = table.rows + [table.avg_row]
    cells = [list(COLUMNS)] + [[fmt(r.get(c)) for c in COLUMNS] for r in all_rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(COLUMNS))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in cells]
    return "\n".join(lines)


def aggregate_tables(tables: list[ExperimentTable]) -> tuple[ExperimentTable, ExperimentTable]:
    """Per-cell mean and (population) standard deviation across seed tables."""
    if not tables:
        raise DomainError("no tables to aggregate")
    first = tables[0]
    for t in tables[1:]:
        if len(t.rows) != len(first.rows):
            raise ConsistencyError("tables disagree on participant count")

    def combine(row_list: list[dict]) -> tuple[dict, dict]:
        mean_row = {"participant": row_list[0]["participant"]}
        std_row = {"participant": row_list[0]["participant"]}
        for col in METRIC_COLUMNS:
            vals = [r[col] for r in row_list if r.get(col) is not None]
            mean_row[col] = float(np.mean(vals)) if vals else None
            std_row[col] = float(np.std(vals)) if vals else None
        return mean_row, std_row

    mean_rows, std_rows = [], []
    for i in range(len(first.rows)):
        m, s = combine([t.rows[i] for t in tables])
        mean_rows.append(m)
        std_rows.append(s)
    mean_avg, std_avg = combine([t.avg_row for t in tables])
    return (
        ExperimentTable(rows=mean_rows, avg_row=mean_avg),
        ExperimentTable(rows=std_rows, avg_row=std_avg),
    )


def format_aggregate(mean_table: ExperimentTable, std_table: ExperimentTable, decimals: int = 4) -> str:
    """mean +/- std view across seeds."""

    def fmt(m, s) -> str:
        if m is None:
            return "-"
        if isinstance(m, str):
            return m
        return f"{m:.{decimals}f}±{s:.{decimals}f}"

    pairs = list(zip(mean_table.rows + [mean_table.avg_row], std_table.rows + [std_table.avg_row]))
    cells = [list(COLUMNS)] + [[fmt(mr.get(c), sr.get(c)) for c in COLUMNS] for mr, sr in pairs]
    widths = [max(len(line[i]) for line in cells) for i in range(len(COLUMNS))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in cells]
    return "\n".join(lines)
