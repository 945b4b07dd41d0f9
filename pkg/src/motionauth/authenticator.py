"""Per-user genuine-vs-impostor classifiers.

Two variants share one interface: an FCN (three conv/batch-norm/ReLU blocks,
global average pooling, dense, softmax) and a transformer encoder
(embedding + position codes, encoder stack, mean pooling, dense, softmax).
Inputs are either raw windows or windows extended by a forecast.
"""

import csv
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data.sessions import N_FEATURES
from .data.windows import labels_of
from .errors import ConfigurationError, DataError, ShapeError
from .eval.metrics import ScoreSet, compute_eer
from .forecaster import ForecastSpec, forecast_targets
from .nn import (
    Adam,
    Conv1dBlock,
    EncoderLayer,
    Linear,
    LossWeights,
    ModelConfig,
    Module,
    Tensor,
    bce_loss,
    composite_loss,
    concat,
    global_average_pool,
    mse_loss,
    no_grad,
    positional_encoding,
    softmax,
)

log = logging.getLogger(__name__)

FCN = "fcn"
TF = "tf"
NO_FORECAST = "no_forecast"
WITH_FORECAST = "with_forecast"
DEFAULT_LR = {FCN: 1e-3, TF: 1e-4}


@dataclass(frozen=True)
class ClassifierConfig:
    variant: str = TF
    input_length: int = 45
    filters: tuple = (128, 256, 128)
    kernels: tuple = (8, 5, 3)
    d_model: int = 512
    n_layers: int = 2
    n_head: int = 8
    d_k: int = 64
    d_v: int = 64
    d_hidden: int = 2048
    learning_rate: float = None
    epochs: int = 200
    batch_size: int = 32
    standardize: bool = False
    head_gain: float = 0.1

    def __post_init__(self):
        if self.variant not in (FCN, TF):
            raise ConfigurationError(f"variant must be 'fcn' or 'tf', got {self.variant!r}")
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate", DEFAULT_LR[self.variant])
        if len(self.filters) != len(self.kernels):
            raise ConfigurationError("filters and kernels must have equal length")
        if self.input_length < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("input_length, epochs and batch_size must be positive")

    def encoder_config(self):
        return ModelConfig(d_model=self.d_model, n_head=self.n_head, d_q=self.d_k, d_k=self.d_k,
                           d_v=self.d_v, d_hidden=self.d_hidden, n_encoder_layers=self.n_layers,
                           n_decoder_layers=0)

    def to_dict(self):
        d = asdict(self)
        d["filters"], d["kernels"] = list(self.filters), list(self.kernels)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["filters"], d["kernels"] = tuple(d["filters"]), tuple(d["kernels"])
        return cls(**d)


class FCNClassifier(Module):
    def __init__(self, cfg, rng, dtype=np.float32):
        chans = (N_FEATURES,) + tuple(cfg.filters)
        self.blocks = [Conv1dBlock(chans[i], chans[i + 1], cfg.kernels[i], rng, dtype)
                       for i in range(len(cfg.filters))]
        self.out = Linear(chans[-1], 2, rng, dtype, gain=cfg.head_gain)

    def forward(self, x):
        h = x
        for block in self.blocks:
            h = block(h)
        return softmax(self.out(global_average_pool(h)))


class TransformerClassifier(Module):
    """No time code here: positions only."""

    def __init__(self, cfg, rng, dtype=np.float32):
        ecfg = cfg.encoder_config()
        self.embed = Linear(N_FEATURES, cfg.d_model, rng, dtype)
        self.layers = [EncoderLayer(ecfg, rng, dtype) for _ in range(cfg.n_layers)]
        self.out = Linear(cfg.d_model, 2, rng, dtype, gain=cfg.head_gain)
        self.d_model = cfg.d_model

    def forward(self, x):
        pe = positional_encoding(x.shape[1], self.d_model).astype(x.dtype)
        h = self.embed(x) + Tensor(pe)
        for layer in self.layers:
            h = layer(h)
        return softmax(self.out(h.mean(axis=1)))


@dataclass
class AuthScore:
    genuine_probability: float
    probabilities: tuple

    def decision(self, threshold):
        return authenticate(self, threshold)


def authenticate(score, threshold):
    """Accept iff the genuine probability is >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ConfigurationError(f"threshold must lie in [0, 1], got {threshold}")
    return score.genuine_probability >= threshold


class AuthModel:
    """One user's classifier plus input scaling and training metadata."""

    def __init__(self, user_id, config, seed=0, dtype=np.float32):
        self.user_id = user_id
        self.config = config
        self.seed = seed
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        net_cls = FCNClassifier if config.variant == FCN else TransformerClassifier
        self.net = net_cls(config, rng, self.dtype)
        self.feature_mean = np.zeros(N_FEATURES)
        self.feature_std = np.ones(N_FEATURES)
        self.metadata = {}

    def _prepare(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 3 or values.shape[1] != self.config.input_length or values.shape[2] != N_FEATURES:
            raise ShapeError(f"expected (batch, {self.config.input_length}, {N_FEATURES}), got {values.shape}")
        return self._scale(values)

    def _scale(self, values):
        return Tensor(((values - self.feature_mean) / self.feature_std).astype(self.dtype))

    def probabilities(self, values):
        """Differentiable (batch, 2) class probabilities; column 1 is genuine."""
        return self.net(self._prepare(values))

    def scores(self, values, batch_size=256):
        """Genuine probabilities in inference mode."""
        was = self.net.training
        self.net.eval()
        out = []
        try:
            with no_grad():
                for lo in range(0, len(values), batch_size):
                    out.append(self.probabilities(values[lo:lo + batch_size]).data[:, 1])
        finally:
            self.net.train(was)
        return np.concatenate(out).astype(np.float64) if out else np.zeros(0)

    def save(self, path, manifest=None):
        cfg = {"variant": self.config.variant, "classifier": self.config.to_dict(),
               "user_id": self.user_id, "seed": self.seed, "dtype": self.dtype.name}
        state = self.net.state_dict()
        state["__feature_mean__"] = self.feature_mean
        state["__feature_std__"] = self.feature_std
        return save_checkpoint(path, "authenticator", cfg, state, {**self.metadata, **(manifest or {})})

    @classmethod
    def load(cls, path):
        kind, cfg, state, manifest = load_checkpoint(path)
        if kind != "authenticator":
            raise ConfigurationError(f"{path} holds a {kind!r} checkpoint, not an authenticator")
        model = cls(cfg["user_id"], ClassifierConfig.from_dict(cfg["classifier"]), cfg["seed"],
                    np.dtype(cfg["dtype"]))
        model.feature_mean = state.pop("__feature_mean__")
        model.feature_std = state.pop("__feature_std__")
        model.net.load_state_dict(state)
        model.metadata = manifest
        return model


def classify_window(model, values):
    """Score one (input_length, 4) matrix."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ShapeError(f"classify_window expects one (length, {N_FEATURES}) matrix")
    was = model.net.training
    model.net.eval()
    try:
        with no_grad():
            p = model.probabilities(values[None]).data[0].astype(np.float64)
    finally:
        model.net.train(was)
    return AuthScore(float(p[1]), (float(p[0]), float(p[1])))


def concat_forecast(window, forecast):
    """Append forecast rows (x, y, z, trigger probability) below the window."""
    window = np.asarray(window)
    rows = forecast.as_rows() if hasattr(forecast, "as_rows") else np.asarray(forecast)
    if rows.shape[-1] != window.shape[-1]:
        raise ShapeError(f"forecast has {rows.shape[-1]} features, window has {window.shape[-1]}")
    if rows.shape[-2] == 0:
        return window
    return np.concatenate([window, rows.astype(window.dtype)], axis=-2)


def prepare_inputs(windows, mode, forecaster=None, spec=None, forecast_impostors=True):
    """Stacked classifier inputs for ``windows``.

    With forecasting, every window (genuine or impostor) is extended by the
    forecaster's output. With ``forecast_impostors=False`` impostors are
    extended by their real continuation instead, where the session has one.
    """
    values = np.stack([w.values for w in windows])
    if mode == NO_FORECAST or spec is None or spec.l_forecasting == 0:
        return values
    if mode != WITH_FORECAST:
        raise ConfigurationError(f"unknown mode {mode!r}")
    if forecaster is None:
        raise ConfigurationError("with_forecast mode needs a forecaster")
    out = concat_forecast(values, forecaster.forecast_windows(windows, spec))
    if not forecast_impostors:
        for i, w in enumerate(windows):
            fut = w.future(spec.l_forecasting) if w.label == 0 else None
            if fut is not None:
                out[i, spec.l_window:] = fut
    return out


@dataclass
class ClassifierTrainResult:
    model: AuthModel
    loss_trace: list
    validation_eer: list
    best_epoch: int
    metrics: list = field(default_factory=list)


def _val_eer(model, inputs, labels):
    if inputs is None or len(labels) == 0 or labels.min() == labels.max():
        return None
    return compute_eer(ScoreSet.from_labels(model.scores(inputs), labels)).eer


def train_classifier(model, split, mode=NO_FORECAST, forecaster=None, spec=None,
                     weights=LossWeights(), seed=0, joint=False, forecast_impostors=True,
                     progress=None):
    """Fit ``model`` on the split's day-1 windows and keep the best-validation-EER epoch.

    ``no_forecast`` minimizes the label BCE only. ``with_forecast`` feeds
    window + forecast: by default the forecaster is frozen and its outputs are
    computed once; ``joint`` instead back-propagates label, forecast-MSE and
    trigger-BCE terms through both networks every step.
    """
    cfg = model.config
    if not split.train or not any(w.label == 0 for w in split.train):
        raise DataError("training split has no impostor windows")
    forecasting = mode == WITH_FORECAST and spec is not None and spec.l_forecasting > 0
    if mode == WITH_FORECAST and spec is None:
        raise ConfigurationError("with_forecast mode needs a ForecastSpec")
    if forecasting and split.window_spec.size != spec.l_window:
        raise ConfigurationError("ForecastSpec.l_window does not match the split window size")
    expected = split.window_spec.size + (spec.l_forecasting if forecasting else 0)
    if cfg.input_length != expected:
        raise ConfigurationError(f"classifier input_length {cfg.input_length} != {expected}")

    labels = labels_of(split.train).astype(np.float64)
    val_labels = labels_of(split.validation)
    if joint and forecasting:
        train_x = None
    else:
        train_x = prepare_inputs(split.train, mode, forecaster, spec, forecast_impostors)
    val_x = prepare_inputs(split.validation, mode, forecaster, spec) if split.validation else None

    if cfg.standardize:
        ref = train_x if train_x is not None else prepare_inputs(split.train, mode, forecaster, spec)
        flat = ref.reshape(-1, N_FEATURES)
        model.feature_mean = flat.mean(axis=0)
        model.feature_std = np.where(flat.std(axis=0) > 1e-8, flat.std(axis=0), 1.0)

    params = dict(model.net.named_parameters())
    if joint and forecasting:
        params.update({f"forecaster.{k}": v for k, v in forecaster.named_parameters()})
        fc_keep, fc_targets, _ = forecast_targets(split.train, spec)
        target_of = {id(w): t for w, t in zip(fc_keep, fc_targets)}
    opt = Adam(params.items(), lr=cfg.learning_rate)
    rng = np.random.default_rng(seed)

    trace, val_trace, metrics = [], [], []
    best_key, best_state, best_epoch = None, model.net.state_dict(), -1
    for epoch in range(cfg.epochs):
        model.net.train()
        order = rng.permutation(len(labels))
        total = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            opt.zero_grad()
            if joint and forecasting:
                loss = _joint_loss(model, forecaster, [split.train[i] for i in idx], labels[idx],
                                   spec, weights, target_of)
            else:
                probs = model.probabilities(train_x[idx])
                loss = bce_loss(probs[:, 1], labels[idx])
            loss.backward()
            opt.step()
            total += float(loss.data) * len(idx)
        trace.append(total / len(labels))
        if joint and forecasting and split.validation:
            forecaster.eval()
            val_x = prepare_inputs(split.validation, mode, forecaster, spec)
        v_eer = _val_eer(model, val_x, val_labels)
        v_loss = _val_loss(model, val_x, val_labels)
        val_trace.append(v_eer)
        metrics.append({"epoch": epoch, "train_loss": trace[-1], "val_eer": v_eer, "val_loss": v_loss})
        key = (v_eer if v_eer is not None else 0.0, v_loss if v_loss is not None else trace[-1])
        if best_key is None or key < best_key:
            best_key, best_state, best_epoch = key, model.net.state_dict(), epoch
        if progress is not None:
            progress(epoch, trace[-1], v_eer)
    model.net.load_state_dict(best_state)
    model.net.eval()
    model.metadata.update({"seed": seed, "epochs": cfg.epochs, "best_epoch": best_epoch, "mode": mode,
                           "split_fingerprint": split.fingerprint(), "joint": bool(joint and forecasting)})
    return ClassifierTrainResult(model, trace, val_trace, best_epoch, metrics)


def _val_loss(model, inputs, labels):
    if inputs is None or len(labels) == 0:
        return None
    p = np.clip(model.scores(inputs), 1e-7, 1 - 1e-7)
    return float(-np.mean(labels * np.log(p) + (1 - labels) * np.log1p(-p)))


def _joint_loss(model, forecaster, windows, labels, spec, weights, target_of):
    values = np.stack([w.values for w in windows])
    starts = np.array([w.start for w in windows])
    forecaster.train()
    pos, trig = forecaster.predict(values, starts, spec)
    fc_rows = concat([pos, trig.reshape(trig.shape + (1,))], axis=-1)
    inputs = concat([model._scale(values), _scale_rows(model, fc_rows)], axis=1)
    label_loss = bce_loss(model.net(inputs)[:, 1], labels)
    have = [i for i, w in enumerate(windows) if w.label == 1 and id(w) in target_of]
    if not have:
        return label_loss
    tgt = np.stack([target_of[id(windows[i])] for i in have])
    f_loss = mse_loss(pos[have], tgt[..., :3])
    t_loss = bce_loss(trig[have], tgt[..., 3], soft=True)
    return composite_loss(label_loss, f_loss, t_loss, weights)


def _scale_rows(model, rows):
    if not model.config.standardize:
        return rows
    return (rows - Tensor(model.feature_mean.astype(model.dtype))) * (1.0 / model.feature_std).astype(model.dtype)


def score_windows(model, windows, mode=NO_FORECAST, forecaster=None, spec=None):
    return model.scores(prepare_inputs(windows, mode, forecaster, spec))


def evaluate_classifier(model, windows, mode=NO_FORECAST, forecaster=None, spec=None):
    """Test EER of one user's model on labeled windows."""
    scores = score_windows(model, windows, mode, forecaster, spec)
    return compute_eer(ScoreSet.from_labels(scores, labels_of(windows))), scores


# ------------------------------------------------------------------ scores file
SCORE_COLUMNS = ("user", "window_id", "label", "genuine_probability")


def write_scores(path, user, windows, scores, append=False):
    path = Path(path)
    new = not (append and path.exists())
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(SCORE_COLUMNS)
        for win, s in zip(windows, scores):
            w.writerow([user, win.window_id, win.label, repr(float(s))])
    return path


def read_scores(path):
    """{user: ScoreSet} from a scores CSV."""
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SCORE_COLUMNS:
            raise DataError(f"{path}: header must be {','.join(SCORE_COLUMNS)}")
        for n, row in enumerate(reader, 2):
            try:
                user, _, label, p = row[0], row[1], int(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{n}: malformed score row ({exc})") from exc
            if label not in (0, 1) or not 0.0 <= p <= 1.0:
                raise DataError(f"{path}:{n}: label must be 0/1 and probability in [0, 1]")
            rows.setdefault(user, ([], []))[0 if label == 1 else 1].append(p)
    return {u: ScoreSet(np.array(g), np.array(i)) for u, (g, i) in rows.items()}


def reduced(config, **overrides):
    return replace(config, **overrides)
