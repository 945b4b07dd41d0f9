"""One-shot transformer encoder-decoder for trajectory forecasting.

The encoder reads a window of ``l_window`` timestamps. The decoder input is
the last ``l_overlap`` rows of that window followed by ``l_forecasting``
zero rows; a dense head on the decoder output emits every future step in a
single pass. Inputs to both stacks are a learned embedding plus sine/cosine
position codes plus the scalar time code ``t/T - 0.5`` broadcast over the
embedding width, where ``t`` is the absolute timestamp within the session.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data.sessions import N_FEATURES, N_TIMESTAMPS
from .errors import ConfigurationError, EvaluationError, ShapeError
from .nn import (
    Adam,
    DecoderLayer,
    EncoderLayer,
    Linear,
    LossWeights,
    ModelConfig,
    Module,
    Tensor,
    bce_loss,
    causal_mask,
    mse_loss,
    no_grad,
    positional_encoding,
    sigmoid,
    temporal_encoding,
)

log = logging.getLogger(__name__)

MAX_SPAN = 95
MIN_OVERLAP = 5


def overlap_grid(l_window):
    return list(range(MIN_OVERLAP, l_window - MIN_OVERLAP + 1, 5))


def default_overlap(l_window):
    """Lower median of {5, 10, ..., l_window - 5}."""
    grid = overlap_grid(l_window)
    if not grid:
        raise ConfigurationError(f"l_window {l_window} leaves no overlap in [5, l_window - 5]")
    return grid[(len(grid) - 1) // 2]


@dataclass(frozen=True)
class ForecastSpec:
    l_window: int
    l_initial: int
    l_overlap: int
    l_forecasting: int

    def __post_init__(self):
        if self.l_initial + self.l_overlap != self.l_window:
            raise ConfigurationError(f"l_window must equal l_initial + l_overlap: {self}")
        if not MIN_OVERLAP <= self.l_overlap <= self.l_window - MIN_OVERLAP:
            raise ConfigurationError(f"l_overlap must lie in [5, l_window - 5]: {self}")
        if self.l_forecasting < 0:
            raise ConfigurationError("l_forecasting must be >= 0")
        if self.l_window + self.l_forecasting > MAX_SPAN:
            raise ConfigurationError(f"l_window + l_forecasting exceeds {MAX_SPAN}: {self}")

    @classmethod
    def make(cls, l_window, l_forecasting, l_overlap=None):
        lo = default_overlap(l_window) if l_overlap is None else l_overlap
        return cls(l_window, l_window - lo, lo, l_forecasting)

    @property
    def decoder_length(self):
        return self.l_overlap + self.l_forecasting


@dataclass
class ForecastOutput:
    """``positions`` (..., h, 3) in meters; ``trigger`` (..., h) probabilities."""

    positions: np.ndarray
    trigger: np.ndarray

    def as_rows(self):
        return np.concatenate([self.positions, self.trigger[..., None]], axis=-1)


def build_decoder_input(window, spec):
    """(..., l_overlap + l_forecasting, f): window tail then zeros."""
    window = np.asarray(window)
    if window.shape[-2] != spec.l_window:
        raise ConfigurationError(f"window has {window.shape[-2]} rows, spec expects {spec.l_window}")
    out = np.zeros(window.shape[:-2] + (spec.decoder_length, window.shape[-1]), dtype=window.dtype)
    out[..., :spec.l_overlap, :] = window[..., spec.l_initial:, :]
    return out


def cross_attention_mask(spec):
    """Decoder row p sits at time l_initial + p and may see encoder rows at times <= that."""
    p = np.arange(spec.decoder_length)[:, None]
    q = np.arange(spec.l_window)[None, :]
    return q <= spec.l_initial + p


class ForecasterModel(Module):
    def __init__(self, config=ModelConfig(), seed=0, dtype=np.float32,
                 n_features=N_FEATURES, total_timestamps=N_TIMESTAMPS):
        self.config = config
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.n_features = n_features
        self.total_timestamps = total_timestamps
        rng = np.random.default_rng(seed)
        self.embed = Linear(n_features, config.d_model, rng, dtype)
        self.encoder = [EncoderLayer(config, rng, dtype) for _ in range(config.n_encoder_layers)]
        self.decoder = [DecoderLayer(config, rng, dtype) for _ in range(config.n_decoder_layers)]
        self.head = Linear(config.d_model, n_features, rng, dtype)
        self.trained = False
        self.decoder_calls = 0

    def _embed(self, rows, times):
        """rows (B, L, f), times (B, L) absolute timestamps."""
        n = rows.shape[1]
        pe = positional_encoding(n, self.config.d_model)
        te = temporal_encoding(times, self.total_timestamps)[..., None]
        return self.embed(Tensor(rows.astype(self.dtype))) + Tensor((pe + te).astype(self.dtype))

    def encode(self, window, starts):
        times = starts[:, None] + np.arange(window.shape[1])[None, :]
        h = self._embed(window, times)
        for layer in self.encoder:
            h = layer(h)
        return h

    def decode(self, window, memory, starts, spec):
        self.decoder_calls += 1
        dec_in = build_decoder_input(window, spec)
        times = starts[:, None] + spec.l_initial + np.arange(spec.decoder_length)[None, :]
        h = self._embed(dec_in, times)
        self_mask = causal_mask(spec.decoder_length)
        cross_mask = cross_attention_mask(spec)
        for layer in self.decoder:
            h = layer(h, memory, self_mask, cross_mask)
        return h[:, spec.l_overlap:, :]

    def forward(self, window, starts, spec):
        """Raw head output (B, l_forecasting, f): positions, then the trigger logit."""
        window = np.asarray(window)
        if window.ndim != 3 or window.shape[1] != spec.l_window or window.shape[2] != self.n_features:
            raise ShapeError(f"expected (batch, {spec.l_window}, {self.n_features}), got {window.shape}")
        starts = np.broadcast_to(np.asarray(starts, dtype=np.int64), (window.shape[0],))
        memory = self.encode(window, starts)
        return self.head(self.decode(window, memory, starts, spec))

    def predict(self, window, starts, spec):
        """Differentiable (positions, trigger probability) tensors."""
        raw = self.forward(window, starts, spec)
        return raw[..., :3], sigmoid(raw[..., 3])

    def forecast_windows(self, windows, spec):
        values = np.stack([w.values for w in windows])
        starts = np.array([w.start for w in windows])
        return forecast_batch(self, values, starts, spec, allow_untrained=True)

    def save(self, path, manifest=None):
        cfg = {"model": self.config.to_dict(), "seed": self.seed, "dtype": self.dtype.name,
               "n_features": self.n_features, "total_timestamps": self.total_timestamps,
               "trained": self.trained}
        return save_checkpoint(path, "forecaster", cfg, self.state_dict(), manifest)

    @classmethod
    def load(cls, path):
        kind, cfg, state, manifest = load_checkpoint(path)
        if kind != "forecaster":
            raise ConfigurationError(f"{path} holds a {kind!r} checkpoint, not a forecaster")
        model = cls(ModelConfig(**cfg["model"]), cfg["seed"], np.dtype(cfg["dtype"]),
                    cfg["n_features"], cfg["total_timestamps"])
        model.load_state_dict(state)
        model.trained = cfg["trained"]
        return model, manifest


def forecast_batch(model, windows, starts, spec, allow_untrained=False):
    if not (model.trained or allow_untrained):
        raise ConfigurationError("forecaster is untrained; pass allow_untrained=True to use it anyway")
    if spec.l_forecasting == 0:
        b = windows.shape[0]
        return ForecastOutput(np.zeros((b, 0, 3)), np.zeros((b, 0)))
    was_training = model.training
    model.eval()
    try:
        with no_grad():
            pos, trig = model.predict(windows, starts, spec)
    finally:
        model.train(was_training)
    return ForecastOutput(pos.data, trig.data)


def forecast(model, window, spec, start=0, allow_untrained=False):
    """Forecast ``l_forecasting`` steps after one (l_window, f) window."""
    window = np.asarray(window)
    if window.ndim != 2:
        raise ShapeError(f"forecast expects one (l_window, f) window, got {window.shape}")
    out = forecast_batch(model, window[None], np.array([start]), spec, allow_untrained)
    return ForecastOutput(out.positions[0], out.trigger[0])


@dataclass(frozen=True)
class TrainSettings:
    learning_rate: float = 1e-4
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)

    def to_dict(self):
        return asdict(self)


@dataclass
class ForecastTrainResult:
    model: ForecasterModel
    loss_trace: list
    validation_mse: list
    n_excluded: int


def forecast_targets(windows, spec):
    """Keep windows with l_forecasting ground-truth rows after them; returns (kept, targets, n_dropped)."""
    kept, targets = [], []
    for w in windows:
        fut = w.future(spec.l_forecasting)
        if fut is not None:
            kept.append(w)
            targets.append(fut)
    n_dropped = len(windows) - len(kept)
    tgt = np.stack(targets) if targets else np.zeros((0, spec.l_forecasting, N_FEATURES))
    return kept, tgt, n_dropped


def forecast_loss(model, values, starts, targets, spec, weights):
    """lambda_F * position MSE + lambda_T * trigger BCE on one batch."""
    pos, trig = model.predict(values, starts, spec)
    total = None
    if weights.forecast:
        total = mse_loss(pos, targets[..., :3]) * weights.forecast
    if weights.trigger:
        term = bce_loss(trig, targets[..., 3], soft=True) * weights.trigger
        total = term if total is None else total + term
    if total is None:
        raise ConfigurationError("both forecasting loss weights are zero; nothing to train")
    return total


def fit_forecaster(model, train_windows, val_windows, spec, settings=TrainSettings(), progress=None):
    """Train on genuine windows that have ``l_forecasting`` rows of tail room."""
    if spec.l_forecasting == 0:
        raise ConfigurationError("cannot train a forecaster with l_forecasting = 0")
    genuine = [w for w in train_windows if w.label == 1]
    bad = [w for w in genuine if w.length != spec.l_window]
    if bad:
        raise ConfigurationError(f"window length {bad[0].length} != l_window {spec.l_window}")
    kept, targets, dropped = forecast_targets(genuine, spec)
    if dropped:
        log.warning("excluded %d/%d windows without %d rows of tail room",
                    dropped, len(genuine), spec.l_forecasting)
    if not kept:
        raise ConfigurationError("no training window has enough tail room for the horizon")
    values = np.stack([w.values for w in kept])
    starts = np.array([w.start for w in kept])
    val = [w for w in val_windows if w.label == 1 and w.future(spec.l_forecasting) is not None]

    opt = Adam(model.named_parameters(), lr=settings.learning_rate)
    rng = np.random.default_rng(settings.seed)
    trace, val_trace = [], []
    model.train()
    for epoch in range(settings.epochs):
        order = rng.permutation(len(kept))
        total, count = 0.0, 0
        for lo in range(0, len(order), settings.batch_size):
            idx = order[lo:lo + settings.batch_size]
            opt.zero_grad()
            loss = forecast_loss(model, values[idx], starts[idx], targets[idx], spec, settings.weights)
            loss.backward()
            opt.step()
            total += float(loss.data) * len(idx)
            count += len(idx)
        trace.append(total / count)
        if val:
            model.trained = True
            val_trace.append(evaluate_forecaster_mse(model, val, spec))
        if progress is not None:
            progress(epoch, trace[-1], val_trace[-1] if val_trace else None)
    model.trained = True
    model.eval()
    return ForecastTrainResult(model, trace, val_trace, dropped)


def train_forecaster(model, split, spec, settings=TrainSettings(), progress=None):
    """Per-user forecaster on the split's genuine day-1 training windows."""
    if split.window_spec.size != spec.l_window:
        raise ConfigurationError(f"split windows are {split.window_spec.size} long, spec wants {spec.l_window}")
    return fit_forecaster(model, split.train, split.validation, spec, settings, progress)


def evaluate_forecaster_mse(model, windows, spec):
    """Mean over windows of the position-channel MSE (trigger excluded)."""
    kept, targets, _ = forecast_targets(windows, spec)
    if not kept:
        raise EvaluationError("no evaluation window has ground truth for the horizon")
    out = model.forecast_windows(kept, spec)
    err = (np.asarray(out.positions, dtype=np.float64) - targets[..., :3]) ** 2
    return float(err.reshape(len(kept), -1).mean(axis=1).mean())


def persistence_mse(windows, spec):
    """MSE of repeating each window's last position for the whole horizon."""
    kept, targets, _ = forecast_targets(windows, spec)
    if not kept:
        raise EvaluationError("no evaluation window has ground truth for the horizon")
    last = np.stack([w.values[-1, :3] for w in kept])[:, None, :]
    err = (targets[..., :3] - last) ** 2
    return float(err.reshape(len(kept), -1).mean(axis=1).mean())
