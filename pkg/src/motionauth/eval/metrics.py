"""FAR / FRR / EER and EER-reduction statistics.

A score is the genuine-class probability. A trial is accepted when its
score is >= the threshold, so FAR(t) = share of impostor scores >= t and
FRR(t) = share of genuine scores < t.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import ConfigurationError, EvaluationError


@dataclass(frozen=True)
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "genuine", np.asarray(self.genuine, dtype=np.float64).ravel())
        object.__setattr__(self, "impostor", np.asarray(self.impostor, dtype=np.float64).ravel())

    @classmethod
    def from_labels(cls, scores, labels):
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels)
        return cls(scores[labels == 1], scores[labels == 0])

    def check(self):
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise EvaluationError("EER needs at least one genuine and one impostor score")


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold_at_eer: float


@dataclass(frozen=True)
class EerSummary:
    """Per-subject EERs and their arithmetic mean."""

    per_subject: dict = field(default_factory=dict)
    mean_eer: float = float("nan")

    @classmethod
    def from_subjects(cls, per_subject):
        if not per_subject:
            raise EvaluationError("no subjects to summarize")
        vals = [per_subject[k] for k in sorted(per_subject)]
        return cls(dict(per_subject), float(np.mean(vals)))


def compute_far_frr(scores, threshold):
    if not 0.0 <= threshold <= 1.0:
        raise ConfigurationError(f"threshold must lie in [0, 1], got {threshold}")
    scores.check()
    far = float(np.mean(scores.impostor >= threshold))
    frr = float(np.mean(scores.genuine < threshold))
    return far, frr


def rate_curve(scores):
    """(thresholds, FAR, FRR) over the sorted distinct scores plus one step past the max."""
    scores.check()
    gen = np.sort(scores.genuine)
    imp = np.sort(scores.impostor)
    th = np.unique(np.concatenate([gen, imp]))
    th = np.append(th, np.nextafter(th[-1], np.inf))
    far, frr = kernels.threshold_rates(gen, imp, th)
    return th, far, frr


def compute_eer(scores):
    """EER with linear interpolation between the two thresholds bracketing FAR = FRR."""
    th, far, frr = rate_curve(scores)
    diff = far - frr  # non-increasing in the threshold
    j = int(np.argmax(diff <= 0))
    if diff[j] == 0 or j == 0:
        return EerResult(float(far[j]), float(th[j]))
    a = diff[j - 1] / (diff[j - 1] - diff[j])
    eer = far[j - 1] + a * (far[j] - far[j - 1])
    return EerResult(float(eer), float(th[j - 1] + a * (th[j] - th[j - 1])))


def reduction_percentage(no_forecast_eer, best_forecast_eer):
    """100 * (no_forecast - best_forecast) / no_forecast."""
    if no_forecast_eer <= 0:
        raise EvaluationError("EER reduction is undefined for a non-positive baseline EER")
    return 100.0 * (no_forecast_eer - best_forecast_eer) / no_forecast_eer


@dataclass(frozen=True)
class ReductionSummary:
    per_row_best: dict
    max_reduction: float
    mean_per_row_best: float
    mean_all_cells: float


def reduction_summary(grid):
    """EER reductions of a (window size x horizon) grid whose horizon 0 column is the baseline.

    ``mean_per_row_best`` averages each row's best forecast cell;
    ``mean_all_cells`` averages every present forecast cell.
    """
    per_row, all_cells = {}, []
    for ws in grid.window_sizes:
        base = grid.get(ws, 0)
        forecast = [grid.get(ws, h) for h in grid.horizons if h > 0]
        forecast = [v for v in forecast if v is not None]
        if base is None or not forecast:
            continue
        per_row[ws] = reduction_percentage(base, min(forecast))
        all_cells.extend(reduction_percentage(base, v) for v in forecast)
    if not per_row:
        raise EvaluationError("grid has no row with both a +0 cell and a forecast cell")
    rows = list(per_row.values())
    return ReductionSummary(per_row, max(rows), float(np.mean(rows)), float(np.mean(all_cells)))
