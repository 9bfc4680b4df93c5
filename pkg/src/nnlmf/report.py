"""Delimited/JSON tables written by the experiment runner.

Numbers are rendered with ``repr(float)``, the shortest string that parses
back to the same double, so files compare byte-for-byte across runs.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CURVE_COLUMNS = ("iteration", "series", "value", "value_db")
STABILITY_COLUMNS = ("mu", "d", "k", "class", "divergence_fraction")
SCALAR_COLUMNS = ("quantity", "value")

# value_db of a non-positive linear value
NONPOSITIVE = "nonpositive"


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)

    def render_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()

    def render_json(self) -> str:
        rows = [[_num(v) if isinstance(v, float) else v for v in row] for row in self.rows]
        return json.dumps({"columns": list(self.columns), "rows": rows}, allow_nan=False) + "\n"

    def write(self, path: Path, fmt: str) -> Path:
        path = Path(path).with_suffix("." + fmt)
        text = self.render_csv() if fmt == "csv" else self.render_json()
        path.write_text(text, encoding="utf-8")
        return path


class CurveTable(Table):
    """Rows ``(iteration, series, value, value_db)`` ordered by series then iteration."""

    def __init__(self):
        super().__init__(CURVE_COLUMNS)

    def add(self, series: str, values, iterations, with_db: bool = False):
        values = np.asarray(values, dtype=float)
        for n in iterations:
            v = float(values[n])
            if with_db:
                db = 10.0 * math.log10(v) if v > 0 else NONPOSITIVE
            else:
                db = None
            self.rows.append([int(n), series, v, db])


def read_table(path) -> Table:
    """Read a table written by :meth:`Table.write` (CSV cells stay strings)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        obj = json.loads(text)
        return Table(tuple(obj["columns"]), obj["rows"])
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return Table(tuple(header), [list(r) for r in reader])
