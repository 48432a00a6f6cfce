"""Render corpus statistics tables and multi-system leaderboards."""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

from .corpus import SPLITS, SplitStats
from .metrics import ScoreReport

FORMATS = ("markdown", "csv", "json")

# Canonical leaderboard column order; extra columns follow in row order.
_LEADERBOARD_COLUMNS = ("rouge1", "rouge2", "rougeLsum", "bertscore_f1")

_REPORT_COLUMN_FOR_METRIC = {
    "rouge1": "rouge1",
    "rouge2": "rouge2",
    "rougeLsum": "rougeLsum",
    "bertscore": "bertscore_f1",
}


def _canon_format(fmt: str) -> str:
    fmt = {"md": "markdown"}.get(fmt, fmt)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS} (or 'md')")
    return fmt


def leaderboard_row(report: ScoreReport) -> dict:
    """Flatten a ScoreReport into a leaderboard row (f1 means, as percentages)."""
    row = {"system_name": report.system_name}
    for metric, column in _REPORT_COLUMN_FOR_METRIC.items():
        if metric in report.corpus_mean:
            row[column] = 100.0 * report.corpus_mean[metric].f1
    return row


def _as_rows(reports_or_rows: Sequence) -> list[dict]:
    rows = []
    for item in reports_or_rows:
        if isinstance(item, ScoreReport):
            rows.append(leaderboard_row(item))
        elif isinstance(item, dict):
            if "system_name" not in item:
                raise ValueError(f"leaderboard row {item!r} is missing 'system_name'")
            rows.append(dict(item))
        else:
            raise ValueError(f"cannot build a leaderboard row from {type(item).__name__}")
    return rows


def _column_order(rows: list[dict]) -> list[str]:
    columns = ["system_name"]
    columns += [c for c in _LEADERBOARD_COLUMNS if c in rows[0]]
    columns += [c for c in rows[0] if c not in columns]
    expected = set(rows[0])
    for row in rows[1:]:
        for missing in sorted(expected - set(row)):
            raise ValueError(f"row {row.get('system_name')!r} is missing column {missing!r}")
        for missing in sorted(set(row) - expected):
            raise ValueError(f"row {rows[0]['system_name']!r} is missing column {missing!r}")
    return columns


def _fmt_cell(value) -> str:
    if isinstance(value, bool) or isinstance(value, str):
        return str(value)
    if isinstance(value, (int, float)):
        return f"{value:.2f}"
    return str(value)


def _markdown_table(columns: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(columns) + " |", "| " + " | ".join("---" for _ in columns) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _csv_table(columns: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def render_leaderboard(reports_or_rows: Sequence, format: str = "markdown", sort_key: str = "rouge1") -> str:
    """Deterministic leaderboard text; rows sorted descending by ``sort_key``,
    ties broken by system_name ascending. markdown/csv print 2 decimals; json
    keeps full precision."""
    fmt = _canon_format(format)
    rows = _as_rows(reports_or_rows)
    if not rows:
        return _markdown_table(["system_name"], []) if fmt == "markdown" else (
            "system_name\r\n" if fmt == "csv" else "[]\n"
        )
    columns = _column_order(rows)
    if sort_key not in columns:
        raise ValueError(f"unknown sort_key {sort_key!r}; columns are {columns}")
    # Two stable passes: name ascending, then sort_key descending, so ties on
    # the sort key stay alphabetical.
    rows.sort(key=lambda r: r["system_name"])
    rows.sort(key=lambda r: r[sort_key], reverse=True)
    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in rows], ensure_ascii=False, indent=2) + "\n"
    cells = [[_fmt_cell(r[c]) for c in columns] for r in rows]
    if fmt == "markdown":
        return _markdown_table(columns, cells)
    return _csv_table(columns, cells)


_STAT_ROWS = (
    ("encounters", "num_encounters"),
    ("avg turns", "avg_turns"),
    ("avg dialogue tokens", "avg_dialogue_tokens"),
    ("avg note tokens", "avg_note_tokens"),
)


def render_stats_table(stats: Sequence[SplitStats], format: str = "markdown") -> str:
    """Table 1-shaped statistics: one column per split (train..test3 order),
    one row per statistic."""
    fmt = _canon_format(format)
    seen = set()
    for s in stats:
        if s.split in seen:
            raise ValueError(f"duplicate split {s.split!r} in stats input")
        seen.add(s.split)
    ordered = [s for split in SPLITS for s in stats if s.split == split]
    if fmt == "json":
        payload = [
            {
                "split": s.split,
                "num_encounters": s.num_encounters,
                "avg_turns": s.avg_turns,
                "avg_dialogue_tokens": s.avg_dialogue_tokens,
                "avg_note_tokens": s.avg_note_tokens,
            }
            for s in ordered
        ]
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    columns = ["statistic"] + [s.split for s in ordered]
    cells = []
    for label, attr in _STAT_ROWS:
        row = [label]
        for s in ordered:
            value = getattr(s, attr)
            row.append(str(value) if attr == "num_encounters" else f"{value:.2f}")
        cells.append(row)
    if fmt == "markdown":
        return _markdown_table(columns, cells)
    return _csv_table(columns, cells)
