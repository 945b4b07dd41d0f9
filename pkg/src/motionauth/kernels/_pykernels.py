"""Pure-numpy fallback for the compiled kernels; identical signatures."""

import numpy as np


def softmax_forward(x):
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_backward(y, gy):
    dot = (y * gy).sum(axis=1, keepdims=True)
    return y * (gy - dot)


def layer_norm_forward(x, gamma, beta, eps):
    mean = x.mean(axis=1, keepdims=True)
    diff = x - mean
    var = (diff * diff).mean(axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = diff * rstd
    return xhat * gamma + beta, xhat, rstd[:, 0]


def layer_norm_backward(gy, xhat, rstd, gamma):
    g = gy * gamma
    m1 = g.mean(axis=1, keepdims=True)
    m2 = (g * xhat).mean(axis=1, keepdims=True)
    gx = rstd[:, None] * (g - m1 - xhat * m2)
    return gx, (gy * xhat).sum(axis=0), gy.sum(axis=0)


def threshold_rates(genuine, impostor, thresholds):
    """FAR (impostor >= t) and FRR (genuine < t) for sorted inputs."""
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.shape[0]
    n_imp = impostor.shape[0]
    far = (n_imp - np.searchsorted(impostor, thresholds, side="left")) / n_imp
    return far, frr
