# cython: language_level=3
"""Compiled row kernels: softmax, layer norm and FAR/FRR threshold sweeps.

Every function takes C-contiguous 2-D arrays (rows are independent) and
accumulates in double precision regardless of the storage dtype.
"""

import numpy as np
cimport numpy as cnp
from cython cimport floating
from libc.math cimport exp, expf, sqrt

cnp.import_array()


def softmax_forward(floating[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double s
    cdef floating mx, inv
    out_arr = np.empty((n, m), dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            mx = x[i, 0]
            for j in range(1, m):
                if x[i, j] > mx:
                    mx = x[i, j]
            s = 0.0
            for j in range(m):
                # single-precision exp for float32 rows; vectorizes and matches numpy's float32 path
                if floating is float:
                    out[i, j] = expf(x[i, j] - mx)
                else:
                    out[i, j] = exp(x[i, j] - mx)
                s += out[i, j]
            inv = <floating>(1.0 / s)
            for j in range(m):
                out[i, j] = out[i, j] * inv
    return out_arr


def softmax_backward(floating[:, ::1] y, floating[:, ::1] gy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1], i, j
    cdef double dot
    out_arr = np.empty((n, m), dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            dot = 0.0
            for j in range(m):
                dot += y[i, j] * gy[i, j]
            for j in range(m):
                out[i, j] = <floating>(y[i, j] * (gy[i, j] - dot))
    return out_arr


def layer_norm_forward(floating[:, ::1] x, floating[::1] gamma, floating[::1] beta, double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    cdef double mean, var, r, diff
    dt = np.float32 if floating is float else np.float64
    y_arr = np.empty((n, d), dtype=dt)
    xhat_arr = np.empty((n, d), dtype=dt)
    rstd_arr = np.empty(n, dtype=dt)
    cdef floating[:, ::1] y = y_arr
    cdef floating[:, ::1] xhat = xhat_arr
    cdef floating[::1] rstd = rstd_arr
    with nogil:
        for i in range(n):
            mean = 0.0
            for j in range(d):
                mean += x[i, j]
            mean /= d
            var = 0.0
            for j in range(d):
                diff = x[i, j] - mean
                var += diff * diff
            var /= d
            r = 1.0 / sqrt(var + eps)
            rstd[i] = <floating>r
            for j in range(d):
                diff = (x[i, j] - mean) * r
                xhat[i, j] = <floating>diff
                y[i, j] = <floating>(diff * gamma[j] + beta[j])
    return y_arr, xhat_arr, rstd_arr


def layer_norm_backward(floating[:, ::1] gy, floating[:, ::1] xhat, floating[::1] rstd,
                        floating[::1] gamma):
    cdef Py_ssize_t n = gy.shape[0], d = gy.shape[1], i, j
    cdef double m1, m2, g
    dt = np.float32 if floating is float else np.float64
    gx_arr = np.empty((n, d), dtype=dt)
    cdef floating[:, ::1] gx = gx_arr
    cdef double[::1] ggamma = np.zeros(d, dtype=np.float64)
    cdef double[::1] gbeta = np.zeros(d, dtype=np.float64)
    with nogil:
        for i in range(n):
            m1 = 0.0
            m2 = 0.0
            for j in range(d):
                g = gy[i, j] * gamma[j]
                m1 += g
                m2 += g * xhat[i, j]
                ggamma[j] += gy[i, j] * xhat[i, j]
                gbeta[j] += gy[i, j]
            m1 /= d
            m2 /= d
            for j in range(d):
                g = gy[i, j] * gamma[j]
                gx[i, j] = <floating>(rstd[i] * (g - m1 - xhat[i, j] * m2))
    return gx_arr, np.asarray(ggamma).astype(dt), np.asarray(gbeta).astype(dt)


def threshold_rates(double[::1] genuine, double[::1] impostor, double[::1] thresholds):
    """FAR (impostor >= t) and FRR (genuine < t) for sorted inputs, by a merge walk."""
    cdef Py_ssize_t ng = genuine.shape[0], ni = impostor.shape[0], nt = thresholds.shape[0]
    cdef Py_ssize_t k, gi = 0, ii = 0
    cdef double t
    far_arr = np.empty(nt, dtype=np.float64)
    frr_arr = np.empty(nt, dtype=np.float64)
    cdef double[::1] far = far_arr
    cdef double[::1] frr = frr_arr
    with nogil:
        for k in range(nt):
            t = thresholds[k]
            while gi < ng and genuine[gi] < t:
                gi += 1
            while ii < ni and impostor[ii] < t:
                ii += 1
            frr[k] = <double>gi / ng
            far[k] = <double>(ni - ii) / ni
    return far_arr, frr_arr
