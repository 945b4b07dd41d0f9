from dataclasses import asdict, dataclass

from ..errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    """Transformer widths and depths. Defaults are the full-size forecaster."""

    d_model: int = 512
    n_head: int = 8
    d_q: int = 64
    d_k: int = 64
    d_v: int = 64
    d_hidden: int = 2048
    n_encoder_layers: int = 3
    n_decoder_layers: int = 1
    dropout_rate: float = 0.0

    def __post_init__(self):
        for name in ("d_model", "n_head", "d_q", "d_k", "d_v", "d_hidden"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.n_encoder_layers < 1 or self.n_decoder_layers < 0:
            raise ConfigurationError("need >= 1 encoder layer and >= 0 decoder layers")
        if self.d_model % 2:
            raise ConfigurationError(f"d_model must be even, got {self.d_model}")
        if self.d_q != self.d_k:
            raise ConfigurationError(f"d_q ({self.d_q}) must equal d_k ({self.d_k})")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError("dropout_rate must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LossWeights:
    """Weights of the forecasting (MSE) and trigger (BCE) terms added to the label loss."""

    forecast: float = 1.0
    trigger: float = 1.0

    def validate(self):
        for name in ("forecast", "trigger"):
            value = getattr(self, name)
            if not value == value or value in (float("inf"), float("-inf")):
                raise ConfigurationError(f"loss weight {name} must be finite")
            if value < 0:
                raise ConfigurationError(f"loss weight {name} must be non-negative, got {value}")

    def __post_init__(self):
        self.validate()
