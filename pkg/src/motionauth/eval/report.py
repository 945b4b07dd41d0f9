"""Table CSVs, aligned-text renderings, overlap series and a JSON summary.

Files written under the output directory:

``no_forecast_eer.csv``   variant, one column per window size, mean
``forecast_mse.csv``      ws, +10 .. +70 (``--`` outside the envelope)
``forecast_eer_<v>.csv``  ws, +0 .. +70 for classifier variant ``v``
``overlap_ws<n>_h<m>.csv`` overlap, mse
``tables.txt``            every table above, aligned for reading
``summary.json``          grids, reductions, timings, manifest
"""

import csv
import io
import json
from pathlib import Path

from .. import __version__
from ..errors import EvaluationError
from . import reference
from .grid import render_window_table, write_window_table
from .metrics import reduction_summary
from .sweep import overlap_spread


def write_overlap_series(series, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["overlap", "mse"])
    for lo in sorted(series):
        w.writerow([lo, repr(float(series[lo]))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def reduction_block(grid):
    """Both mean-reduction candidates and the max, next to the published figures."""
    try:
        s = reduction_summary(grid)
    except EvaluationError:
        return None
    return {
        "per_row_best_percent": {str(k): v for k, v in s.per_row_best.items()},
        "max_reduction_percent": s.max_reduction,
        "max_reduction_published": reference.MAX_REDUCTION,
        "mean_reduction_candidates": {
            "mean_of_per_row_best": s.mean_per_row_best,
            "mean_of_all_forecast_cells": s.mean_all_cells,
        },
        "mean_reduction_published": reference.MEAN_REDUCTION,
    }


def emit_report(out_dir, no_forecast=None, forecast_eer=None, forecast_mse=None, overlap=None,
                timings=None, manifest=None, include_reference=False):
    """Write whatever results are present; returns ``{name: path}``.

    ``no_forecast`` maps variant to a horizon-0 grid, ``forecast_eer`` maps
    variant to a staircase grid with a +0 column, ``overlap`` maps
    (ws, h) to ``{overlap: mse}``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written, text, summary = {}, [], {"tool": "motionauth", "version": __version__}

    if no_forecast is not None:
        p = out / "no_forecast_eer.csv"
        write_window_table(no_forecast, p)
        written["no_forecast_eer"] = p
        text.append(render_window_table(no_forecast, title="EER without forecasting"))
        summary["no_forecast_eer"] = {v: {str(k[0]): val for k, val in g.present().items()}
                                      for v, g in no_forecast.items()}
    if forecast_mse is not None:
        p = out / "forecast_mse.csv"
        forecast_mse.to_csv(p)
        written["forecast_mse"] = p
        text.append(forecast_mse.render_text("Forecast MSE (positions)"))
        summary["forecast_mse"] = _cells(forecast_mse)
    summary["reductions"] = {}
    for variant, grid in (forecast_eer or {}).items():
        p = out / f"forecast_eer_{variant}.csv"
        grid.to_csv(p)
        written[f"forecast_eer_{variant}"] = p
        text.append(grid.render_text(f"EER with forecasting ({variant})"))
        summary.setdefault("forecast_eer", {})[variant] = _cells(grid)
        block = reduction_block(grid)
        if block is not None:
            summary["reductions"][variant] = block
    if overlap:
        summary["overlap"] = {}
        for (ws, h), series in sorted(overlap.items()):
            p = out / f"overlap_ws{ws}_h{h}.csv"
            write_overlap_series(series, p)
            written[f"overlap_ws{ws}_h{h}"] = p
            summary["overlap"][f"ws{ws}_h{h}"] = {"series": {str(k): v for k, v in sorted(series.items())},
                                                   "spread": overlap_spread(series)}
    if include_reference:
        summary["published"] = {
            "reductions": {v: reduction_block(reference.forecast_eer_table(v)) for v in ("fcn", "tf")},
        }
    if timings:
        summary["timings"] = timings
    if manifest:
        summary["manifest"] = manifest

    p = out / "tables.txt"
    p.write_text("\n".join(text))
    written["tables"] = p
    p = out / "summary.json"
    p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written["summary"] = p
    return written


def _cells(grid):
    return {f"{ws}+{h}": v for (ws, h), v in sorted(grid.present().items())}
