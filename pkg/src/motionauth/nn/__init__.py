"""Minimal neural-network substrate: autodiff tensors, layers, losses and Adam."""

from .config import LossWeights, ModelConfig
from .functional import (
    batch_norm,
    bce_loss,
    causal_mask,
    composite_loss,
    conv1d,
    global_average_pool,
    layer_norm,
    mse_loss,
    positional_encoding,
    scaled_dot_product_attention,
    softmax,
    temporal_encoding,
)
from .gradcheck import gradient_check, gradient_errors
from .layers import (
    Conv1dBlock,
    DecoderLayer,
    EncoderLayer,
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
)
from .optim import Adam, AdamState, adam_step
from .tensor import Tensor, concat, no_grad, relu, sigmoid

__all__ = [
    "Adam", "AdamState", "Conv1dBlock", "DecoderLayer", "EncoderLayer", "FeedForward",
    "LayerNorm", "Linear", "LossWeights", "ModelConfig", "Module", "MultiHeadAttention",
    "Tensor", "adam_step", "batch_norm", "bce_loss", "causal_mask", "composite_loss",
    "concat", "conv1d", "global_average_pool", "gradient_check", "gradient_errors",
    "layer_norm", "mse_loss", "no_grad", "positional_encoding", "relu",
    "scaled_dot_product_attention", "sigmoid", "softmax", "temporal_encoding",
]
