"""Reverse-mode vs central finite-difference gradient comparison."""

import numpy as np


def _relative(a, b, floor=1e-7):
    # floor keeps identically-zero gradients (a parameter whose effect a later
    # normalization cancels) from dividing finite-difference noise by noise
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)


def gradient_errors(fn, params, step=1e-5):
    """Per-parameter relative error ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-7).

    ``fn()`` must rebuild a scalar Tensor from ``params`` (name -> Tensor) on
    every call. Use float64 parameters; ``step`` is the central-difference
    half-width.
    """
    for p in params.values():
        p.grad = None
    out = fn()
    out.backward()
    analytic = {name: (p.grad if p.grad is not None else np.zeros_like(p.data)).astype(np.float64)
                for name, p in params.items()}
    errors = {}
    for name, p in params.items():
        numeric = np.zeros(p.data.shape, dtype=np.float64)
        flat = p.data.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = float(fn().data)
            flat[i] = orig - step
            down = float(fn().data)
            flat[i] = orig
            nflat[i] = (up - down) / (2.0 * step)
        errors[name] = _relative(analytic[name], numeric)
    return errors


def gradient_check(fn, params, step=1e-5):
    """Max relative gradient error over all parameters (0.0 when there are none)."""
    errors = gradient_errors(fn, params, step)
    return max(errors.values(), default=0.0)
