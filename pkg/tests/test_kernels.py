"""The compiled and numpy kernels agree."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from motionauth import kernels

PY = kernels.get_backend("python")
BACKENDS = kernels.available_backends()
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")

finite = st.floats(-50, 50, allow_nan=False, width=64)
matrices = st.tuples(st.integers(1, 6), st.integers(2, 9)).flatmap(
    lambda s: arrays(np.float64, s, elements=finite))


def test_backend_selection():
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@needs_ext
class TestEquivalence:
    C = kernels.get_backend("cython") if "cython" in BACKENDS else None

    @given(matrices)
    @settings(max_examples=60, deadline=None)
    def test_softmax(self, x):
        np.testing.assert_allclose(self.C.softmax_forward(x), PY.softmax_forward(x), atol=1e-12)
        g = np.cos(x)
        y = PY.softmax_forward(x)
        np.testing.assert_allclose(self.C.softmax_backward(y, g), PY.softmax_backward(y, g), atol=1e-12)

    @given(matrices)
    @settings(max_examples=60, deadline=None)
    def test_layer_norm(self, x):
        d = x.shape[1]
        gamma, beta = np.linspace(0.5, 2, d), np.linspace(-1, 1, d)
        c = self.C.layer_norm_forward(x, gamma, beta, 1e-6)
        p = PY.layer_norm_forward(x, gamma, beta, 1e-6)
        for a, b in zip(c, p):
            np.testing.assert_allclose(a, b, atol=1e-9, rtol=1e-9)
        g = np.sin(x)
        for a, b in zip(self.C.layer_norm_backward(g, c[1], c[2], gamma),
                        PY.layer_norm_backward(g, p[1], p[2], gamma)):
            np.testing.assert_allclose(a, b, atol=1e-7, rtol=1e-7)

    def test_float32(self):
        x = np.random.default_rng(0).normal(size=(5, 8)).astype(np.float32)
        out = self.C.softmax_forward(x)
        assert out.dtype == np.float32
        np.testing.assert_allclose(out, PY.softmax_forward(x), atol=1e-6)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.lists(st.floats(0, 1), min_size=1, max_size=40))
    @settings(max_examples=80, deadline=None)
    def test_threshold_rates(self, gen, imp):
        g, i = np.sort(gen), np.sort(imp)
        th = np.append(np.unique(np.concatenate([g, i])), 1.5)
        for a, b in zip(self.C.threshold_rates(g, i, th), PY.threshold_rates(g, i, th)):
            np.testing.assert_array_equal(a, b)


def test_threshold_rates_by_hand():
    far, frr = kernels.threshold_rates(np.array([0.4, 0.6, 0.9]), np.array([0.1, 0.3, 0.7]),
                                       np.array([0.0, 0.5, 1.0]))
    np.testing.assert_allclose(far, [1.0, 1 / 3, 0.0])
    np.testing.assert_allclose(frr, [0.0, 1 / 3, 1.0])
