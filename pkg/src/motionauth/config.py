"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key has a type and a
default; unknown keys and unparseable values are configuration errors.
Lists are comma-separated. Command-line flags override file values.
"""

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .authenticator import ClassifierConfig
from .errors import ConfigurationError
from .eval.sweep import SweepConfig
from .forecaster import TrainSettings
from .nn import LossWeights, ModelConfig


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text):
    text = text.strip()
    return tuple(int(t) for t in text.split(",")) if text else ()


def _strs(text):
    text = text.strip()
    return tuple(t.strip() for t in text.split(",")) if text else ()


def _opt_int(text):
    text = text.strip()
    return None if text.lower() in ("", "none", "auto") else int(text)


def _opt_str(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else text


@dataclass
class RunConfig:
    # data
    data_root: str = None
    synthetic_users: int = 8
    synthetic_seed: int = 0
    window_size: int = 45
    stride: int = 5
    validation_fraction: float = 0.2
    users: tuple = ()
    # forecasting
    horizon: int = 30
    l_overlap: int = None
    window_sizes: tuple = ()
    horizons: tuple = ()
    forecaster_d_model: int = 512
    forecaster_n_head: int = 8
    forecaster_d_k: int = 64
    forecaster_d_v: int = 64
    forecaster_d_hidden: int = 2048
    forecaster_encoder_layers: int = 3
    forecaster_decoder_layers: int = 1
    forecaster_lr: float = 1e-4
    forecaster_epochs: int = 200
    forecaster_scope: str = "per_user"
    lambda_forecast: float = 1.0
    lambda_trigger: float = 1.0
    # classifier
    variant: str = "tf"
    mode: str = "no_forecast"
    classifier_lr: float = None
    classifier_epochs: int = 200
    classifier_d_model: int = 512
    classifier_n_head: int = 8
    classifier_d_k: int = 64
    classifier_d_v: int = 64
    classifier_d_hidden: int = 2048
    classifier_layers: int = 2
    fcn_filters: tuple = (128, 256, 128)
    fcn_kernels: tuple = (8, 5, 3)
    batch_size: int = 32
    standardize: bool = False
    joint: bool = False
    forecast_impostors: bool = True
    # run
    seed: int = 0
    workers: int = None
    out: str = None
    bench_repetitions: int = 100

    def to_text(self):
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_render(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def set(self, key, text):
        """Parse ``text`` into field ``key``."""
        parser = _PARSERS.get(key)
        if parser is None:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            setattr(self, key, parser(text) if isinstance(text, str) else text)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {exc}") from exc

    def validate(self):
        if self.variant not in ("fcn", "tf"):
            raise ConfigurationError(f"variant must be fcn or tf, got {self.variant!r}")
        if self.mode not in ("no_forecast", "with_forecast"):
            raise ConfigurationError(f"mode must be no_forecast or with_forecast, got {self.mode!r}")
        if self.forecaster_scope not in ("per_user", "global"):
            raise ConfigurationError("forecaster_scope must be per_user or global")
        if self.window_size < 1 or self.stride < 1 or self.horizon < 0:
            raise ConfigurationError("window_size and stride must be >= 1, horizon >= 0")
        if self.workers is not None and self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        return self


def _render(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


_TYPES = {
    "data_root": _opt_str, "out": _opt_str, "l_overlap": _opt_int, "workers": _opt_int,
    "users": _strs, "window_sizes": _ints, "horizons": _ints, "fcn_filters": _ints, "fcn_kernels": _ints,
    "classifier_lr": lambda t: None if t.strip().lower() in ("", "none", "auto") else float(t),
}
_PARSERS = {}
for _f in fields(RunConfig):
    if _f.name in _TYPES:
        _PARSERS[_f.name] = _TYPES[_f.name]
    elif isinstance(_f.default, bool):
        _PARSERS[_f.name] = _bool
    elif isinstance(_f.default, int):
        _PARSERS[_f.name] = int
    elif isinstance(_f.default, float):
        _PARSERS[_f.name] = float
    else:
        _PARSERS[_f.name] = str


def parse_config(text, source="<config>", base=None):
    cfg = base if base is not None else RunConfig()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            cfg.set(key, value)
        except ConfigurationError as exc:
            raise ConfigurationError(f"{source}:{n}: {exc}") from exc
    return cfg


def load_config(path, base=None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path), base)


def loss_weights(cfg):
    return LossWeights(cfg.lambda_forecast, cfg.lambda_trigger)


def forecaster_config(cfg):
    return ModelConfig(d_model=cfg.forecaster_d_model, n_head=cfg.forecaster_n_head, d_q=cfg.forecaster_d_k,
                       d_k=cfg.forecaster_d_k, d_v=cfg.forecaster_d_v, d_hidden=cfg.forecaster_d_hidden,
                       n_encoder_layers=cfg.forecaster_encoder_layers,
                       n_decoder_layers=cfg.forecaster_decoder_layers)


def forecaster_settings(cfg):
    return TrainSettings(cfg.forecaster_lr, cfg.forecaster_epochs, cfg.batch_size, cfg.seed, loss_weights(cfg))


def classifier_overrides(cfg):
    """ClassifierConfig keyword arguments other than variant and input length."""
    opts = {"epochs": cfg.classifier_epochs, "batch_size": cfg.batch_size, "standardize": cfg.standardize}
    if cfg.classifier_lr is not None:
        opts["learning_rate"] = cfg.classifier_lr
    if cfg.variant == "fcn":
        opts.update(filters=cfg.fcn_filters, kernels=cfg.fcn_kernels)
    else:
        opts.update(d_model=cfg.classifier_d_model, n_head=cfg.classifier_n_head, d_k=cfg.classifier_d_k,
                    d_v=cfg.classifier_d_v, d_hidden=cfg.classifier_d_hidden, n_layers=cfg.classifier_layers)
    return opts


def classifier_config(cfg, input_length):
    return ClassifierConfig(variant=cfg.variant, input_length=input_length, **classifier_overrides(cfg))


def sweep_config(cfg):
    return SweepConfig(variant=cfg.variant, mode=cfg.mode, window_sizes=cfg.window_sizes,
                       horizons=cfg.horizons, stride=cfg.stride,
                       validation_fraction=cfg.validation_fraction, master_seed=cfg.seed,
                       classifier=classifier_overrides(cfg), forecaster=forecaster_config(cfg),
                       forecaster_lr=cfg.forecaster_lr, forecaster_epochs=cfg.forecaster_epochs,
                       batch_size=cfg.batch_size, weights=loss_weights(cfg),
                       forecaster_scope=cfg.forecaster_scope, l_overlap=cfg.l_overlap, users=cfg.users,
                       joint=cfg.joint, forecast_impostors=cfg.forecast_impostors)
