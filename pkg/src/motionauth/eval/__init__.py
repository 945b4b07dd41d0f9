"""Error rates, result grids, sweeps, timing and reports."""

from .grid import (
    FORECAST_HORIZONS,
    FORECAST_WINDOWS,
    NO_FORECAST_WINDOWS,
    SweepGrid,
    in_envelope,
    parse_window_table,
    render_window_table,
    write_window_table,
)
from .metrics import (
    EerResult,
    EerSummary,
    ReductionSummary,
    ScoreSet,
    compute_eer,
    compute_far_frr,
    rate_curve,
    reduction_percentage,
    reduction_summary,
)

__all__ = [
    "EerResult", "EerSummary", "FORECAST_HORIZONS", "FORECAST_WINDOWS", "NO_FORECAST_WINDOWS",
    "ReductionSummary", "ScoreSet", "SweepGrid", "compute_eer", "compute_far_frr", "in_envelope",
    "parse_window_table", "rate_curve", "reduction_percentage", "reduction_summary",
    "render_window_table", "write_window_table",
]
