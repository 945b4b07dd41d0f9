"""Seeded, cached, optionally parallel sweeps over (window size x horizon) cells.

Every cell is self-contained: its splits, forecasters and classifiers draw
their seeds from ``SeedSequence([master, ...cell coordinates..., stream])``,
so a cell computed alone, in a worker process or resumed from the cache is
bit-identical to the same cell in an uninterrupted serial run.
"""

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..authenticator import (
    NO_FORECAST,
    WITH_FORECAST,
    AuthModel,
    ClassifierConfig,
    evaluate_classifier,
    train_classifier,
)
from ..data.windows import WindowSpec, build_split
from ..errors import ConfigurationError
from ..forecaster import (
    ForecasterModel,
    ForecastSpec,
    TrainSettings,
    evaluate_forecaster_mse,
    fit_forecaster,
    overlap_grid,
)
from ..nn import LossWeights, ModelConfig
from .grid import FORECAST_HORIZONS, FORECAST_WINDOWS, NO_FORECAST_WINDOWS, SweepGrid, in_envelope
from .metrics import EerSummary

log = logging.getLogger(__name__)

PER_USER = "per_user"
GLOBAL = "global"

# stream tags mixed into every SeedSequence entropy list
_STREAM = {"fcn": 0, "tf": 1, "forecaster": 2, "split": 3, "order": 4}


def derive_seed(master, *coords):
    """A 32-bit seed from the master seed and integer coordinates."""
    return int(np.random.SeedSequence([int(master)] + [int(c) for c in coords]).generate_state(1)[0])


@dataclass(frozen=True)
class SweepConfig:
    variant: str = "tf"
    mode: str = NO_FORECAST
    window_sizes: tuple = ()
    horizons: tuple = ()
    stride: int = 5
    validation_fraction: float = 0.2
    master_seed: int = 0
    classifier: dict = field(default_factory=dict)
    forecaster: ModelConfig = field(default_factory=ModelConfig)
    forecaster_lr: float = 1e-4
    forecaster_epochs: int = 200
    batch_size: int = 32
    weights: LossWeights = field(default_factory=LossWeights)
    forecaster_scope: str = PER_USER
    l_overlap: int = None
    users: tuple = ()
    joint: bool = False
    forecast_impostors: bool = True

    def __post_init__(self):
        if self.mode not in (NO_FORECAST, WITH_FORECAST):
            raise ConfigurationError(f"mode must be no_forecast or with_forecast, got {self.mode!r}")
        if self.forecaster_scope not in (PER_USER, GLOBAL):
            raise ConfigurationError("forecaster_scope must be per_user or global")
        if not self.window_sizes:
            sizes = NO_FORECAST_WINDOWS if self.mode == NO_FORECAST else FORECAST_WINDOWS
            object.__setattr__(self, "window_sizes", tuple(sizes))
        if not self.horizons:
            hs = (0,) if self.mode == NO_FORECAST else (0,) + tuple(FORECAST_HORIZONS)
            object.__setattr__(self, "horizons", tuple(hs))
        if self.mode == NO_FORECAST and set(self.horizons) != {0}:
            raise ConfigurationError("no_forecast sweeps take only horizon 0")

    def classifier_config(self, input_length):
        opts = {"batch_size": self.batch_size, **self.classifier}
        return ClassifierConfig(variant=self.variant, input_length=input_length, **opts)

    def to_dict(self):
        d = asdict(self)
        d["window_sizes"], d["horizons"], d["users"] = list(self.window_sizes), list(self.horizons), list(self.users)
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def cells(self):
        return [(ws, h) for ws in self.window_sizes for h in self.horizons if in_envelope(ws, h)]


@dataclass
class CellResult:
    ws: int
    h: int
    per_user_eer: dict
    mean_eer: float
    forecaster_mse: float = None
    seconds: float = 0.0

    def to_dict(self):
        return asdict(self)


@dataclass
class SweepResult:
    config: SweepConfig
    eer: SweepGrid
    mse: SweepGrid
    cells: dict


def _users(sessions, config):
    users = sorted({s.user_id for s in sessions})
    if config.users:
        missing = set(config.users) - set(users)
        if missing:
            raise ConfigurationError(f"users not in corpus: {sorted(missing)}")
        return [u for u in users if u in config.users], users
    return users, users


def _forecaster(config, spec, seed, train, val):
    model = ForecasterModel(config.forecaster, seed=seed)
    settings = TrainSettings(config.forecaster_lr, config.forecaster_epochs, config.batch_size, seed, config.weights)
    fit_forecaster(model, train, val, spec, settings)
    return model


def run_cell(sessions, ws, h, config, progress=None):
    """Train and evaluate every selected user at one (window size, horizon) cell."""
    if not in_envelope(ws, h):
        raise ConfigurationError(f"cell ({ws}, +{h}) exceeds the {ws}+{h} <= 95 envelope")
    t0 = time.perf_counter()
    users, all_users = _users(sessions, config)
    wspec = WindowSpec(ws, config.stride)
    splits = {u: build_split(sessions, wspec, u, config.validation_fraction,
                             derive_seed(config.master_seed, ws, all_users.index(u), _STREAM["split"]))
              for u in users}
    forecasting = config.mode == WITH_FORECAST and h > 0
    fspec = ForecastSpec.make(ws, h, config.l_overlap) if forecasting else None
    shared = None
    if forecasting and config.forecaster_scope == GLOBAL:
        seed = derive_seed(config.master_seed, ws, h, _STREAM["forecaster"])
        shared = _forecaster(config, fspec, seed, [w for s in splits.values() for w in s.train],
                             [w for s in splits.values() for w in s.validation])

    per_user, mses = {}, []
    for u in users:
        split = splits[u]
        idx = all_users.index(u)
        fc = shared
        if forecasting and fc is None:
            fc = _forecaster(config, fspec, derive_seed(config.master_seed, ws, h, idx, _STREAM["forecaster"]),
                             split.train, split.validation)
        if forecasting:
            mses.append(evaluate_forecaster_mse(fc, [w for w in split.test if w.label == 1], fspec))
        mode = WITH_FORECAST if forecasting else NO_FORECAST
        model = AuthModel(u, config.classifier_config(ws + (h if forecasting else 0)),
                          seed=derive_seed(config.master_seed, ws, h, idx, _STREAM[config.variant]))
        train_classifier(model, split, mode, fc, fspec, config.weights,
                         seed=derive_seed(config.master_seed, ws, h, idx, _STREAM["order"]),
                         joint=config.joint, forecast_impostors=config.forecast_impostors)
        per_user[u] = evaluate_classifier(model, split.test, mode, fc, fspec)[0].eer
        if progress is not None:
            progress(ws, h, u, per_user[u])
    summary = EerSummary.from_subjects(per_user)
    return CellResult(ws, h, per_user, summary.mean_eer,
                      float(np.mean(mses)) if mses else None, time.perf_counter() - t0)


def _cell_path(cache_dir, config, ws, h):
    return Path(cache_dir) / f"cell_{config.digest()}_ws{ws}_h{h}.json"


def _load_cell(path):
    d = json.loads(Path(path).read_text())
    return CellResult(**d)


def _store_cell(path, cell):
    path = Path(path)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(cell.to_dict(), sort_keys=True))
    os.replace(tmp, path)


def _run_cell_job(args):
    sessions, ws, h, config = args
    return run_cell(sessions, ws, h, config)


def default_workers(n_pending):
    return max(1, min(os.cpu_count() or 1, n_pending))


def run_sweep(sessions, config, cache_dir=None, workers=None, progress=None):
    """Every in-envelope cell of the grid; cached cells are reused, fresh ones stored as they finish.

    Out-of-envelope cells stay absent from the returned grids.
    """
    cells = config.cells()
    done = {}
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        for ws, h in cells:
            p = _cell_path(cache_dir, config, ws, h)
            if p.exists():
                done[(ws, h)] = _load_cell(p)
    pending = [c for c in cells if c not in done]
    workers = default_workers(len(pending)) if workers is None else max(1, workers)

    def finish(cell):
        done[(cell.ws, cell.h)] = cell
        if cache_dir is not None:
            _store_cell(_cell_path(cache_dir, config, cell.ws, cell.h), cell)
        if progress is not None:
            progress(cell)

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell in pool.map(_run_cell_job, [(sessions, ws, h, config) for ws, h in pending]):
                finish(cell)
    else:
        for ws, h in pending:
            finish(run_cell(sessions, ws, h, config))

    eer = SweepGrid("eer", list(config.window_sizes), list(config.horizons))
    mse = SweepGrid("mse", list(config.window_sizes), [h for h in config.horizons if h > 0])
    for (ws, h), cell in sorted(done.items()):
        eer.set(ws, h, cell.mean_eer)
        if cell.forecaster_mse is not None:
            mse.set(ws, h, cell.forecaster_mse)
    return SweepResult(config, eer, mse, dict(sorted(done.items())))


def run_overlap_sweep(sessions, ws, h, config, overlaps=None):
    """Mean day-2 forecast MSE over users for each overlap length at a fixed (ws, h).

    Returns ``{overlap: mse}``; the caller reports the spread, which is not
    assumed to be small.
    """
    overlaps = list(overlaps) if overlaps is not None else overlap_grid(ws)
    users, all_users = _users(sessions, config)
    wspec = WindowSpec(ws, config.stride)
    out = {}
    for lo in overlaps:
        spec = ForecastSpec.make(ws, h, lo)
        vals = []
        for u in users:
            idx = all_users.index(u)
            split = build_split(sessions, wspec, u, config.validation_fraction,
                                derive_seed(config.master_seed, ws, idx, _STREAM["split"]))
            fc = _forecaster(config, spec, derive_seed(config.master_seed, ws, h, idx, _STREAM["forecaster"]),
                             split.train, split.validation)
            vals.append(evaluate_forecaster_mse(fc, [w for w in split.test if w.label == 1], spec))
        out[lo] = float(np.mean(vals))
    return out


def overlap_spread(series):
    vals = list(series.values())
    return max(vals) - min(vals) if vals else 0.0


def sweep_manifest(result, timings=None):
    cfg = result.config
    return {
        "tool": "motionauth",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "master_seed": cfg.master_seed,
        "cells": [c.to_dict() for c in result.cells.values()],
        "timings": timings or {},
    }
