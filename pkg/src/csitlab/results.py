"""Result records and the wide CSV format used by every experiment."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ResultRecord:
    """One sweep point.

    ``point`` holds the coordinates and labels of the point, ``metrics`` the
    measured values.  Metrics listed in ``intervals`` get ``_lo``/``_hi``
    columns and those in ``nats`` get a ``_bits`` column (value / ln 2).
    """

    point: dict
    metrics: dict
    intervals: dict = field(default_factory=dict)
    nats: tuple[str, ...] = ()

    def __post_init__(self):
        for name, (lo, hi) in self.intervals.items():
            v = self.metrics[name]
            if not lo <= v <= hi:
                raise ValueError(f"{name}: interval [{lo}, {hi}] excludes {v}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return _fmt(v.item())
    return str(v)


def columns(records) -> list[str]:
    cols: list[str] = []

    def add(c):
        if c not in cols:
            cols.append(c)

    for r in records:
        for k in r.point:
            add(k)
    for r in records:
        for k in r.metrics:
            add(k)
            if k in r.intervals:
                add(k + "_lo")
                add(k + "_hi")
            if k in r.nats:
                add(k + "_bits")
    return cols


def _row(r: ResultRecord) -> dict:
    row = dict(r.point)
    for k, v in r.metrics.items():
        row[k] = v
        if k in r.intervals:
            row[k + "_lo"], row[k + "_hi"] = r.intervals[k]
        if k in r.nats:
            row[k + "_bits"] = float(v) / math.log(2.0)
    return row


def emit_plotdata(records, path) -> Path:
    """Write one CSV row per record (UTF-8, comma separated, LF line ends)."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = columns(records)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in records:
            row = _row(r)
            writer.writerow([_fmt(row.get(c)) for c in cols])
    return path
