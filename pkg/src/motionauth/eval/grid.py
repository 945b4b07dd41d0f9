"""Window-size x horizon result grids and their CSV / text renderings."""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError

ABSENT = "--"
MAX_SPAN = 95

NO_FORECAST_WINDOWS = list(range(25, 96, 5))
FORECAST_WINDOWS = list(range(25, 86, 10))
FORECAST_HORIZONS = list(range(10, 71, 10))


def in_envelope(ws, h):
    return ws + h <= MAX_SPAN


@dataclass
class SweepGrid:
    """``values[(ws, h)]`` holds a metric; None (or a missing key) marks an absent cell."""

    metric: str
    window_sizes: list
    horizons: list
    values: dict = field(default_factory=dict)

    def get(self, ws, h):
        return self.values.get((ws, h))

    def set(self, ws, h, value):
        self.values[(ws, h)] = None if value is None else float(value)

    def present(self):
        return {k: v for k, v in self.values.items() if v is not None}

    def row_mean(self, ws):
        vals = [self.get(ws, h) for h in self.horizons if self.get(ws, h) is not None]
        return float(np.mean(vals)) if vals else None

    def __eq__(self, other):
        return (isinstance(other, SweepGrid) and self.metric == other.metric
                and list(self.window_sizes) == list(other.window_sizes)
                and list(self.horizons) == list(other.horizons)
                and self.present() == other.present())

    # ------------------------------------------------------------------ CSV
    def to_csv(self, path=None):
        """Wide layout: one row per window size, one column per horizon, '--' when absent."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ws"] + [f"+{h}" for h in self.horizons])
        for ws in self.window_sizes:
            w.writerow([ws] + [_fmt(self.get(ws, h)) for h in self.horizons])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path, metric):
        return cls.parse_csv(Path(path).read_text(), metric)

    @classmethod
    def parse_csv(cls, text, metric):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0] != "ws":
            raise DataError("grid CSV must start with a 'ws' header")
        horizons = [int(c.lstrip("+")) for c in rows[0][1:]]
        grid = cls(metric, [], horizons)
        for row in rows[1:]:
            ws = int(row[0])
            grid.window_sizes.append(ws)
            for h, cell in zip(horizons, row[1:]):
                if cell != ABSENT:
                    grid.set(ws, h, float(cell))
        return grid

    def render_text(self, title=None, digits=3):
        head = ["WS"] + [f"+{h}" for h in self.horizons]
        body = [[str(ws)] + [_short(self.get(ws, h), digits) for h in self.horizons]
                for ws in self.window_sizes]
        return _align(head, body, title)


def _fmt(v):
    return ABSENT if v is None else repr(float(v))


def _short(v, digits):
    return ABSENT if v is None else f"{v:.{digits}f}"


def _align(head, body, title=None):
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = [] if title is None else [title]
    for r in [head] + body:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ no-forecast table
def write_window_table(grids, path=None):
    """No-forecast layout: one row per classifier variant, one column per window size, then Mean."""
    sizes = sorted({ws for g in grids.values() for ws in g.window_sizes})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant"] + [str(ws) for ws in sizes] + ["mean"])
    for variant, g in grids.items():
        vals = [g.get(ws, 0) for ws in sizes]
        present = [v for v in vals if v is not None]
        mean = float(np.mean(present)) if present else None
        w.writerow([variant] + [_fmt(v) for v in vals] + [_fmt(mean)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_window_table(text, metric="eer"):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "variant":
        raise DataError("window table must start with a 'variant' header")
    sizes = [int(c) for c in rows[0][1:-1]]
    out = {}
    for row in rows[1:]:
        g = SweepGrid(metric, list(sizes), [0])
        for ws, cell in zip(sizes, row[1:-1]):
            if cell != ABSENT:
                g.set(ws, 0, float(cell))
        out[row[0]] = g
    return out


def render_window_table(grids, digits=3, title=None):
    sizes = sorted({ws for g in grids.values() for ws in g.window_sizes})
    head = ["WS"] + [str(ws) for ws in sizes] + ["Mean"]
    body = []
    for variant, g in grids.items():
        vals = [g.get(ws, 0) for ws in sizes]
        present = [v for v in vals if v is not None]
        body.append([variant] + [_short(v, digits) for v in vals]
                    + [_short(float(np.mean(present)) if present else None, digits)])
    return _align(head, body, title)
