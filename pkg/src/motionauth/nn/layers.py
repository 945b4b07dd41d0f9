"""Parameterized building blocks."""

import math

import numpy as np

from ..errors import ConfigurationError, ShapeError
from . import functional as F
from .tensor import Tensor, _make, concat, relu


class Module:
    """Parameter container. Tensors with ``requires_grad`` are parameters;
    numpy arrays listed in ``_buffers`` are persistent non-trainable state."""

    training = True
    _buffers = ()

    def named_parameters(self, prefix=""):
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, list) and value and isinstance(value[0], Module):
                for i, sub in enumerate(value):
                    yield from sub.named_parameters(f"{name}.{i}.")

    def parameters(self):
        return dict(self.named_parameters())

    def modules(self):
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, list) and value and isinstance(value[0], Module):
                for sub in value:
                    yield from sub.modules()

    def named_buffers(self, prefix=""):
        for key in self._buffers:
            yield f"{prefix}{key}", getattr(self, key)
        for key, value in vars(self).items():
            if isinstance(value, Module):
                yield from value.named_buffers(f"{prefix}{key}.")
            elif isinstance(value, list) and value and isinstance(value[0], Module):
                for i, sub in enumerate(value):
                    yield from sub.named_buffers(f"{prefix}{key}.{i}.")

    def state_dict(self):
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state):
        params = self.parameters()
        buffers = dict(self.named_buffers())
        missing = (set(params) | set(buffers)) - set(state)
        if missing:
            raise ConfigurationError(f"state is missing entries: {sorted(missing)[:5]}")
        for name, p in params.items():
            if state[name].shape != p.data.shape:
                raise ShapeError(f"{name}: stored {state[name].shape} != {p.data.shape}")
            p.data = np.array(state[name], dtype=p.data.dtype)
        for name, b in buffers.items():
            b[...] = state[name]

    def zero_grad(self):
        for p in self.parameters().values():
            p.grad = None

    def train(self, mode=True):
        for m in self.modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _uniform(rng, shape, fan_in, dtype, gain=1.0):
    bound = gain / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


class Linear(Module):
    def __init__(self, d_in, d_out, rng, dtype=np.float32, gain=1.0):
        self.weight = _uniform(rng, (d_in, d_out), d_in, dtype, gain)
        self.bias = _uniform(rng, (d_out,), d_in, dtype, gain)

    def forward(self, x):
        if x.shape[-1] != self.weight.shape[0]:
            raise ShapeError(f"Linear expects width {self.weight.shape[0]}, got {x.shape[-1]}")
        return x @ self.weight + self.bias


class LayerNorm(Module):
    def __init__(self, d, dtype=np.float32, eps=1e-6):
        self.gamma = Tensor(np.ones(d, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(d, dtype=dtype), requires_grad=True)
        self.eps = eps

    def forward(self, x):
        return F.layer_norm(x, self.gamma, self.beta, self.eps)


def dropout(x, rate, rng):
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return _make(x.data * keep, (x,), lambda g: (g * keep,))


class MultiHeadAttention(Module):
    """n_head parallel scaled dot-product attentions, concatenated and projected.

    Head ``h`` owns column block ``h`` of ``w_q``/``w_k``/``w_v``, so each head's
    projection is a separate (d_model, d_k) matrix stored side by side.
    """

    def __init__(self, d_model, n_head, d_k, d_v, rng, dtype=np.float32):
        self.n_head, self.d_k, self.d_v = n_head, d_k, d_v
        self.w_q = _uniform(rng, (d_model, n_head * d_k), d_model, dtype)
        self.b_q = _uniform(rng, (n_head * d_k,), d_model, dtype)
        # no key bias: it shifts every score in a row equally and softmax ignores it
        self.w_k = _uniform(rng, (d_model, n_head * d_k), d_model, dtype)
        self.w_v = _uniform(rng, (d_model, n_head * d_v), d_model, dtype)
        self.b_v = _uniform(rng, (n_head * d_v,), d_model, dtype)
        self.w_o = _uniform(rng, (n_head * d_v, d_model), n_head * d_v, dtype)
        self.b_o = _uniform(rng, (d_model,), n_head * d_v, dtype)

    def forward(self, q_in, k_in, v_in, mask=None):
        d_model = self.w_q.shape[0]
        for t in (q_in, k_in, v_in):
            if t.shape[-1] != d_model:
                raise ShapeError(f"attention input width {t.shape[-1]} != d_model {d_model}")
        q = q_in @ self.w_q + self.b_q
        k = k_in @ self.w_k
        v = v_in @ self.w_v + self.b_v
        heads = []
        for h in range(self.n_head):
            qs = slice(h * self.d_k, (h + 1) * self.d_k)
            vs = slice(h * self.d_v, (h + 1) * self.d_v)
            heads.append(F.scaled_dot_product_attention(q[..., qs], k[..., qs], v[..., vs], mask))
        merged = heads[0] if self.n_head == 1 else concat(heads, axis=-1)
        return merged @ self.w_o + self.b_o


class FeedForward(Module):
    def __init__(self, d_model, d_hidden, rng, dtype=np.float32):
        self.inner = Linear(d_model, d_hidden, rng, dtype)
        self.outer = Linear(d_hidden, d_model, rng, dtype)

    def forward(self, x):
        return self.outer(relu(self.inner(x)))


class _Sublayers(Module):
    dropout_rate = 0.0
    rng = None

    def _drop(self, x):
        if self.training and self.dropout_rate > 0:
            return dropout(x, self.dropout_rate, self.rng)
        return x


class EncoderLayer(_Sublayers):
    """Self-attention and feed-forward, each followed by residual add + layer norm."""

    def __init__(self, cfg, rng, dtype=np.float32):
        self.attn = MultiHeadAttention(cfg.d_model, cfg.n_head, cfg.d_k, cfg.d_v, rng, dtype)
        self.norm1 = LayerNorm(cfg.d_model, dtype)
        self.ff = FeedForward(cfg.d_model, cfg.d_hidden, rng, dtype)
        self.norm2 = LayerNorm(cfg.d_model, dtype)
        self.dropout_rate = cfg.dropout_rate
        self.rng = rng

    def forward(self, x, mask=None):
        x = self.norm1(x + self._drop(self.attn(x, x, x, mask)))
        return self.norm2(x + self._drop(self.ff(x)))


class DecoderLayer(_Sublayers):
    """Masked self-attention, masked cross-attention over the encoder output, feed-forward."""

    def __init__(self, cfg, rng, dtype=np.float32):
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.n_head, cfg.d_k, cfg.d_v, rng, dtype)
        self.norm1 = LayerNorm(cfg.d_model, dtype)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.n_head, cfg.d_k, cfg.d_v, rng, dtype)
        self.norm2 = LayerNorm(cfg.d_model, dtype)
        self.ff = FeedForward(cfg.d_model, cfg.d_hidden, rng, dtype)
        self.norm3 = LayerNorm(cfg.d_model, dtype)
        self.dropout_rate = cfg.dropout_rate
        self.rng = rng

    def forward(self, x, memory, self_mask, cross_mask):
        x = self.norm1(x + self._drop(self.self_attn(x, x, x, self_mask)))
        x = self.norm2(x + self._drop(self.cross_attn(x, memory, memory, cross_mask)))
        return self.norm3(x + self._drop(self.ff(x)))


class Conv1dBlock(Module):
    """Convolution ('same' padding) -> batch norm -> ReLU.

    The convolution has no bias: batch norm subtracts the per-channel mean
    right after it, so a bias would never change the output.
    """

    _buffers = ("running_mean", "running_var")

    def __init__(self, in_ch, filters, kernel_size, rng, dtype=np.float32,
                 momentum=0.1, eps=1e-5):
        self.weight = _uniform(rng, (kernel_size, in_ch, filters), kernel_size * in_ch, dtype)
        self.gamma = Tensor(np.ones(filters, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(filters, dtype=dtype), requires_grad=True)
        self.running_mean = np.zeros(filters, dtype=np.float64)
        self.running_var = np.ones(filters, dtype=np.float64)
        self.momentum, self.eps = momentum, eps

    def forward(self, x):
        h = F.conv1d(x, self.weight)
        h = F.batch_norm(h, self.gamma, self.beta, self.running_mean, self.running_var,
                         self.training, self.momentum, self.eps)
        return relu(h)
