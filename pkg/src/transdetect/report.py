"""CSV and markdown rendering of evaluation reports."""
from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

from .metrics import CATEGORIES, MetricsReport

FIELDS = [
    "video", "tau",
    "seg_p", "seg_r", "seg_f1",
    "frame_p", "frame_r", "frame_f1",
    "abe", "rtf",
    "seg_tp", "seg_fp", "seg_fn",
    "frame_tp", "frame_fp", "frame_fn",
    "recall_cut", "recall_normal", "recall_long",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def report_rows(report: MetricsReport, video: str | None = None) -> list[dict]:
    """One row per tau plus a ``mean`` row."""
    name = video if video is not None else report.name
    rows = []
    for counts in report.rows:
        row = counts.as_row()
        row.update(
            video=name, rtf=report.rtf,
            seg_tp=counts.seg_tp, seg_fp=counts.seg_fp, seg_fn=counts.seg_fn,
            frame_tp=counts.frame_tp, frame_fp=counts.frame_fp, frame_fn=counts.frame_fn,
        )
        rows.append(row)
    mean = report.mean()
    mean["video"] = name
    rows.append(mean)
    return rows


def write_csv(rows: Iterable[dict], out=None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=FIELDS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in FIELDS})
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def _cell(value, digits=3) -> str:
    if value in (None, ""):
        return "-"
    try:
        return f"{float(value):.{digits}f}"
    except (TypeError, ValueError):
        return str(value)


def markdown_table(rows: Sequence[dict], mean_only: bool = True) -> str:
    """Segment P/R/F1, Frame P/R/F1, ABE and RTF columns, one line per row."""
    header = (
        "| Method | Seg P | Seg R | Seg F1 | Frame P | Frame R | Frame F1 | ABE | RTF |\n"
        "|---|---|---|---|---|---|---|---|---|\n"
    )
    lines = []
    for r in rows:
        if mean_only and str(r.get("tau")) != "mean":
            continue
        label = r.get("video", "")
        if not mean_only:
            label = f"{label} (tau={r.get('tau')})"
        lines.append(
            f"| {label} | {_cell(r.get('seg_p'))} | {_cell(r.get('seg_r'))} | {_cell(r.get('seg_f1'))} "
            f"| {_cell(r.get('frame_p'))} | {_cell(r.get('frame_r'))} | {_cell(r.get('frame_f1'))} "
            f"| {_cell(r.get('abe'), 2)} | {_cell(r.get('rtf'), 2)} |"
        )
    return header + "\n".join(lines) + "\n"


def category_markdown(report: MetricsReport) -> str:
    lines = ["| Category | Count | Seg Recall | Frame F1 |", "|---|---|---|---|"]
    for row in report.category_table():
        lines.append(f"| {row['category']} | {row['count']} | {_cell(row['recall'])} | {_cell(row['frame_f1'])} |")
    return "\n".join(lines) + "\n"


__all__ = ["FIELDS", "CATEGORIES", "report_rows", "write_csv", "read_csv", "markdown_table", "category_markdown"]
