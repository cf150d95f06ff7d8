"""Result rows and their CSV/JSON serialization."""
from __future__ import annotations

import csv
from dataclasses import dataclass, asdict, fields
import io
import json
import math
import sys

COLUMNS = ("module", "quantity", "value", "stderr", "n", "seed", "substream")


@dataclass(frozen=True)
class Row:
    module: str
    quantity: str
    value: float
    stderr: float = math.nan
    n: int = 0
    seed: int = 0
    substream: int = 0


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def to_json(rows) -> str:
    def clean(d):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}
    return json.dumps([clean(asdict(r)) for r in rows], indent=1) + "\n"


def write_rows(rows, path: str = "-", fmt: str = "csv") -> None:
    text = to_csv(rows) if fmt == "csv" else to_json(rows)
    if path in ("-", "", None):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def write_table(records: list[dict], path: str = "-") -> None:
    """Plain CSV for tables with their own columns (e.g. the scales table)."""
    if not records:
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(records[0])
    w.writerow(cols)
    for rec in records:
        w.writerow([_fmt(rec[c]) for c in cols])
    if path in ("-", "", None):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


ROW_FIELDS = tuple(f.name for f in fields(Row))
