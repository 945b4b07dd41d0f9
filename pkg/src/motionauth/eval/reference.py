"""Published results on the 41-subject HTC ball-throw corpus, for side-by-side reports."""

from .grid import FORECAST_HORIZONS, FORECAST_WINDOWS, NO_FORECAST_WINDOWS, SweepGrid

_NO_FORECAST = {
    "fcn": [0.121, 0.109, 0.101, 0.091, 0.082, 0.080, 0.082, 0.061, 0.075, 0.061, 0.062, 0.064, 0.071, 0.048, 0.066],
    "tf": [0.115, 0.104, 0.097, 0.089, 0.083, 0.077, 0.072, 0.065, 0.064, 0.058, 0.057, 0.063, 0.064, 0.062, 0.061],
}
NO_FORECAST_MEAN = {"fcn": 0.078, "tf": 0.075}

# rows are window sizes 25..85 step 10; columns +10..+70 (MSE) or +0..+70 (EER)
_MSE_ROWS = [
    [0.204, 0.275, 0.318, 0.344, 0.375, 0.386, 0.405],
    [0.216, 0.290, 0.322, 0.357, 0.372, 0.394],
    [0.215, 0.287, 0.332, 0.357, 0.380],
    [0.202, 0.283, 0.327, 0.357],
    [0.209, 0.286, 0.330],
    [0.212, 0.291],
    [0.215],
]
_EER_ROWS = {
    "fcn": [
        [0.121, 0.099, 0.093, 0.089, 0.084, 0.082, 0.086, 0.083],
        [0.101, 0.085, 0.082, 0.077, 0.072, 0.067, 0.073],
        [0.082, 0.079, 0.070, 0.069, 0.061, 0.063],
        [0.082, 0.068, 0.063, 0.057, 0.055],
        [0.075, 0.063, 0.058, 0.052],
        [0.062, 0.060, 0.059],
        [0.071, 0.066],
    ],
    "tf": [
        [0.115, 0.097, 0.091, 0.086, 0.080, 0.081, 0.081, 0.084],
        [0.097, 0.080, 0.075, 0.070, 0.068, 0.064, 0.065],
        [0.083, 0.069, 0.064, 0.061, 0.054, 0.053],
        [0.072, 0.062, 0.057, 0.054, 0.049],
        [0.064, 0.057, 0.053, 0.048],
        [0.057, 0.055, 0.051],
        [0.064, 0.055],
    ],
}

MEAN_REDUCTION = 23.85
MAX_REDUCTION = 36.14


def _staircase(metric, rows, horizons):
    g = SweepGrid(metric, list(FORECAST_WINDOWS), list(horizons))
    for ws, row in zip(FORECAST_WINDOWS, rows):
        for h, v in zip(horizons, row):
            g.set(ws, h, v)
    return g


def no_forecast_table():
    """{variant: SweepGrid over window sizes at horizon 0}."""
    out = {}
    for variant, vals in _NO_FORECAST.items():
        g = SweepGrid("eer", list(NO_FORECAST_WINDOWS), [0])
        for ws, v in zip(NO_FORECAST_WINDOWS, vals):
            g.set(ws, 0, v)
        out[variant] = g
    return out


def forecast_mse_table():
    return _staircase("mse", _MSE_ROWS, FORECAST_HORIZONS)


def forecast_eer_table(variant):
    return _staircase("eer", _EER_ROWS[variant], [0] + FORECAST_HORIZONS)
