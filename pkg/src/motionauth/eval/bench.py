"""Wall-clock latency of forecast + classify, and kernel backend timings."""

import time
from dataclasses import asdict, dataclass

import numpy as np

from .. import kernels
from ..authenticator import classify_window, concat_forecast
from ..errors import ConfigurationError
from ..forecaster import forecast

FRAME_BUDGET_MS = 1000.0 * 3.0 / 135  # one sample interval, 22.22 ms
LATENCY_CEILING_MS = 50.0


@dataclass(frozen=True)
class LatencyStats:
    median_ms: float
    p95_ms: float
    min_ms: float
    max_ms: float
    repetitions: int
    budget_ms: float = FRAME_BUDGET_MS

    def within_budget(self):
        return self.median_ms < self.budget_ms

    def to_dict(self):
        return asdict(self)


def latency_stats(samples_ms, budget_ms=FRAME_BUDGET_MS):
    s = np.asarray(samples_ms, dtype=np.float64)
    return LatencyStats(float(np.median(s)), float(np.percentile(s, 95)), float(s.min()),
                        float(s.max()), int(s.size), budget_ms)


def timing_benchmark(forecaster, auth_model, spec, repetitions=100, window=None, start=0, warmup=5):
    """Per-window latency of one forecast followed by one classification, in ms."""
    if repetitions < 100:
        raise ConfigurationError("timing_benchmark needs at least 100 repetitions")
    if window is None:
        window = np.random.default_rng(0).uniform(0.0, 1.0, (spec.l_window, 4))

    def once():
        if spec.l_forecasting:
            out = forecast(forecaster, window, spec, start=start, allow_untrained=True)
            x = concat_forecast(window, out)
        else:
            x = window
        return classify_window(auth_model, x)

    for _ in range(warmup):
        once()
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        once()
        samples.append(1000.0 * (time.perf_counter() - t0))
    return latency_stats(samples)


def _time(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return 1000.0 * best


def kernel_benchmark(repeats=20, rows=4096, width=64, n_scores=20000, seed=0):
    """Best-of-``repeats`` milliseconds per kernel for every available backend."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((rows, width)).astype(np.float32)
    g = rng.standard_normal((rows, width)).astype(np.float32)
    gamma = np.ones(width, dtype=np.float32)
    beta = np.zeros(width, dtype=np.float32)
    gen = np.sort(rng.uniform(size=n_scores))
    imp = np.sort(rng.uniform(size=n_scores))
    th = np.unique(np.concatenate([gen, imp]))
    out = {}
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        y = k.softmax_forward(x)
        _, xhat, rstd = k.layer_norm_forward(x, gamma, beta, 1e-6)
        out[name] = {
            "softmax_forward": _time(lambda: k.softmax_forward(x), repeats),
            "softmax_backward": _time(lambda: k.softmax_backward(y, g), repeats),
            "layer_norm_forward": _time(lambda: k.layer_norm_forward(x, gamma, beta, 1e-6), repeats),
            "layer_norm_backward": _time(lambda: k.layer_norm_backward(g, xhat, rstd, gamma), repeats),
            "threshold_rates": _time(lambda: k.threshold_rates(gen, imp, th), repeats),
        }
    return out
