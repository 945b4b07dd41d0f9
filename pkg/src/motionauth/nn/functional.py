"""Stateless network operations on :class:`Tensor` values."""

import math

import numpy as np

from .. import kernels
from ..errors import ConfigurationError, DomainError, InvalidMaskError, ShapeError
from .tensor import Tensor, _make, as_tensor, matmul, mean, mul, swapaxes

BCE_EPS = 1e-7
MASK_FILL = -1e9


def positional_encoding(n_positions, d_model):
    """Sine/cosine position table of shape (n_positions, d_model), float64.

    Column pairs (2i, 2i+1) share the frequency ``1 / 10000**(2i/d_model)``.
    """
    if d_model % 2:
        raise ConfigurationError(f"d_model must be even for sine/cosine pairing, got {d_model}")
    if n_positions < 1:
        raise ConfigurationError("n_positions must be >= 1")
    t = np.arange(n_positions, dtype=np.float64)[:, None]
    two_i = np.arange(0, d_model, 2, dtype=np.float64)
    angle = t / np.power(10000.0, two_i / d_model)
    pe = np.empty((n_positions, d_model), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def temporal_encoding(t, total):
    """Map timestamp(s) ``t`` in [0, total] to [-0.5, 0.5] as ``t/total - 0.5``.

    Timestamps past ``total`` (forecasts running beyond the session end)
    extrapolate linearly.
    """
    if total <= 0:
        raise ConfigurationError(f"total timestamps must be positive, got {total}")
    out = np.asarray(t, dtype=np.float64) / total - 0.5
    return float(out) if out.ndim == 0 else out


def softmax(x):
    """Softmax over the last axis (max-subtracted)."""
    x = as_tensor(x)
    y = kernels.softmax_forward(x.data)
    return _make(y, (x,), lambda g: (kernels.softmax_backward(y, g),))


def scaled_dot_product_attention(q, k, v, mask=None, return_weights=False):
    """softmax(q kᵀ / sqrt(d_k)) v.

    ``q`` is (..., n, d_k), ``k`` (..., m, d_k), ``v`` (..., m, d_v). ``mask`` is a
    boolean (n, m) array where True marks key positions a query may attend to;
    masked weights come out exactly zero.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"query width {q.shape[-1]} != key width {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"{k.shape[-2]} keys but {v.shape[-2]} values")
    scores = mul(matmul(q, swapaxes(k)), 1.0 / math.sqrt(q.shape[-1]))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != scores.shape[-2:]:
            raise ShapeError(f"mask shape {mask.shape} != score shape {scores.shape[-2:]}")
        if not mask.any(axis=-1).all():
            raise InvalidMaskError("attention mask has a row with no unmasked entry")
        bias = np.where(mask, 0.0, MASK_FILL).astype(scores.dtype)
        scores = scores + Tensor(bias)
    weights = softmax(scores)
    out = matmul(weights, v)
    return (out, weights.data) if return_weights else out


def causal_mask(n):
    """(n, n) mask letting position p attend to positions <= p."""
    return np.tril(np.ones((n, n), dtype=bool))


def layer_norm(x, gamma, beta, eps=1e-6):
    """Normalize each row over the last axis (population variance), then scale and shift."""
    if x.shape[-1] < 2:
        raise ShapeError("layer_norm needs at least 2 features")
    y, xhat, rstd = kernels.layer_norm_forward(x.data, gamma.data, beta.data, eps)

    def backward(g):
        return kernels.layer_norm_backward(g, xhat, rstd, gamma.data)

    return _make(y, (x, gamma, beta), backward)


def _standardize_channels(x, eps):
    """Per-channel standardization over all leading axes (batch statistics)."""
    c = x.shape[-1]
    rows = np.ascontiguousarray(x.data.reshape(-1, c).T)
    ones = np.ones(rows.shape[1], dtype=x.dtype)
    zeros = np.zeros(rows.shape[1], dtype=x.dtype)
    # channels become rows so the layer-norm kernel does the reduction
    _, xhat_t, rstd = kernels.layer_norm_forward(rows, ones, zeros, eps)
    shape = x.shape

    def backward(g):
        g_t = np.ascontiguousarray(g.reshape(-1, c).T)
        gx_t, _, _ = kernels.layer_norm_backward(g_t, xhat_t, rstd, ones)
        return (gx_t.T.reshape(shape),)

    return _make(np.ascontiguousarray(xhat_t.T).reshape(shape), (x,), backward)


def batch_norm(x, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
    """Batch normalization over every axis but the last (channels).

    In training mode batch statistics are used and ``running_mean`` /
    ``running_var`` (numpy arrays) are updated in place; otherwise the
    running statistics are applied as a fixed affine map.
    """
    if training:
        flat = x.data.reshape(-1, x.shape[-1]).astype(np.float64)
        n = flat.shape[0]
        running_mean *= 1.0 - momentum
        running_mean += momentum * flat.mean(axis=0)
        unbiased = flat.var(axis=0) * (n / max(n - 1, 1))
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased
        xhat = _standardize_channels(x, eps)
    else:
        scale = (1.0 / np.sqrt(running_var + eps)).astype(x.dtype)
        xhat = mul(x + Tensor((-running_mean).astype(x.dtype)), scale)
    return xhat * gamma + beta


def conv1d(x, weight, bias=None):
    """'Same'-padded 1-D convolution along time.

    ``x`` is (batch, length, in_ch), ``weight`` is (kernel, in_ch, out_ch).
    Even kernels pad one more step on the right than on the left.
    """
    if x.ndim != 3:
        raise ShapeError(f"conv1d expects (batch, length, channels), got {x.shape}")
    ksize, cin, cout = weight.shape
    bsz, length, xc = x.shape
    if xc != cin:
        raise ShapeError(f"conv1d input has {xc} channels, kernel expects {cin}")
    if ksize < 1 or length < 1:
        raise ConfigurationError("conv1d needs kernel >= 1 and length >= 1")
    left = (ksize - 1) // 2
    xp = np.pad(x.data, ((0, 0), (left, ksize - 1 - left), (0, 0)))
    # (B, L, cin, K) -> (B, L, K, cin) so the flattened column matches weight (K, cin)
    cols = np.lib.stride_tricks.sliding_window_view(xp, ksize, axis=1)
    cols = np.ascontiguousarray(cols.transpose(0, 1, 3, 2)).reshape(bsz * length, ksize * cin)
    w2 = weight.data.reshape(ksize * cin, cout)
    out = (cols @ w2).reshape(bsz, length, cout)
    if bias is not None:
        out += bias.data

    def backward(g):
        g2 = g.reshape(bsz * length, cout)
        gw = (cols.T @ g2).reshape(ksize, cin, cout)
        gcols = (g2 @ w2.T).reshape(bsz, length, ksize, cin)
        gxp = np.zeros_like(xp)
        for j in range(ksize):
            gxp[:, j:j + length, :] += gcols[:, :, j, :]
        gx = gxp[:, left:left + length, :]
        grads = (gx, gw)
        return grads + ((g2.sum(axis=0),) if bias is not None else ())

    parents = (x, weight) + ((bias,) if bias is not None else ())
    return _make(out, parents, backward)


def global_average_pool(x):
    """Mean over the time axis: (batch, length, ch) -> (batch, ch), or (length, ch) -> (ch,)."""
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-2] == 0:
        raise ShapeError(f"global_average_pool needs a non-empty time axis, got {x.shape}")
    return mean(x, axis=x.ndim - 2)


def mse_loss(pred, target):
    pred = as_tensor(pred)
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=pred.dtype)
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target
    n = diff.size
    value = np.asarray((diff * diff).sum() / n, dtype=pred.dtype)
    return _make(value, (pred,), lambda g: (g * (2.0 / n) * diff,))


def bce_loss(pred, target, soft=False):
    """Mean binary cross-entropy on probabilities clamped to [eps, 1-eps].

    Targets must be exactly 0 or 1 unless ``soft`` is set, in which case any
    value in [0, 1] is accepted (continuous trigger pressure). The gradient is
    taken at the clamped probability so saturated outputs still get a signal.
    """
    pred = as_tensor(pred)
    y = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    if pred.shape != y.shape:
        raise ShapeError(f"bce_loss shapes differ: {pred.shape} vs {y.shape}")
    if soft:
        if np.any((y < 0) | (y > 1)):
            raise DomainError("bce_loss soft targets must lie in [0, 1]")
    elif np.any((y != 0) & (y != 1)):
        raise DomainError("bce_loss targets must be 0 or 1")
    p = np.clip(pred.data.astype(np.float64), BCE_EPS, 1.0 - BCE_EPS)
    n = p.size
    value = -(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum() / n
    dp = (-(y / p) + (1.0 - y) / (1.0 - p)) / n
    dp = dp.astype(pred.dtype)
    return _make(np.asarray(value, dtype=pred.dtype), (pred,), lambda g: (g * dp,))


def composite_loss(label_loss, forecast_loss, trigger_loss, weights):
    """label + lambda_F * forecast + lambda_T * trigger; terms may be tensors or floats."""
    weights.validate()
    total = label_loss
    if weights.forecast:
        total = total + forecast_loss * weights.forecast
    if weights.trigger:
        total = total + trigger_loss * weights.trigger
    return total
