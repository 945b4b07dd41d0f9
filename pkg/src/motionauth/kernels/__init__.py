"""Hot kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set
``MOTIONAUTH_BACKEND=python`` to force the fallback. ``BACKEND`` names the
active implementation and ``get_backend(name)`` returns either module
explicitly (used by the equivalence tests and the benchmark).
"""

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_forced = os.environ.get("MOTIONAUTH_BACKEND", "").lower()
if _forced not in ("", "python", "cython"):
    raise ImportError(f"MOTIONAUTH_BACKEND must be 'python' or 'cython', got {_forced!r}")
if _forced == "cython" and _ckernels is None:
    raise ImportError("MOTIONAUTH_BACKEND=cython but the compiled extension is not built")

_impl = _ckernels if (_ckernels is not None and _forced != "python") else _pykernels
BACKEND = "cython" if _impl is _ckernels else "python"


def get_backend(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not available")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ["python"] + (["cython"] if _ckernels is not None else [])


def _rows(a):
    return np.ascontiguousarray(a.reshape(-1, a.shape[-1]))


def softmax_forward(x):
    """Softmax over the last axis of an array of any rank."""
    return _impl.softmax_forward(_rows(x)).reshape(x.shape)


def softmax_backward(y, gy):
    return _impl.softmax_backward(_rows(y), _rows(gy.astype(y.dtype, copy=False))).reshape(y.shape)


def layer_norm_forward(x, gamma, beta, eps):
    """Returns (y, xhat, rstd); rstd has one entry per row of the flattened input."""
    gamma = np.ascontiguousarray(gamma, dtype=x.dtype)
    beta = np.ascontiguousarray(beta, dtype=x.dtype)
    y, xhat, rstd = _impl.layer_norm_forward(_rows(x), gamma, beta, float(eps))
    return y.reshape(x.shape), xhat.reshape(x.shape), rstd


def layer_norm_backward(gy, xhat, rstd, gamma):
    gamma = np.ascontiguousarray(gamma, dtype=xhat.dtype)
    gx, ggamma, gbeta = _impl.layer_norm_backward(
        _rows(gy.astype(xhat.dtype, copy=False)), _rows(xhat), rstd, gamma
    )
    return gx.reshape(xhat.shape), ggamma, gbeta


def threshold_rates(genuine_sorted, impostor_sorted, thresholds):
    """(FAR, FRR) at each threshold; all three inputs must be sorted ascending."""
    as64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    return _impl.threshold_rates(as64(genuine_sorted), as64(impostor_sorted), as64(thresholds))
