import numpy as np
import pytest

from motionauth.errors import ConfigurationError, NonFiniteGradientError, ShapeError
from motionauth.nn import Adam, AdamState, Tensor, adam_step, concat, no_grad, relu, sigmoid
from motionauth.nn.tensor import grad_enabled


class TestTensor:
    def test_rank_limit(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((1, 1, 1, 1)))

    def test_int_input_becomes_float(self):
        assert Tensor([1, 2]).dtype == np.float64

    def test_shared_node_accumulates(self):
        x = Tensor(np.array([2.0, 3.0]), requires_grad=True)
        y = x * x + x
        y.sum().backward()
        np.testing.assert_allclose(x.grad, 2 * x.data + 1)

    def test_broadcast_unwinds(self):
        w = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.zeros(3), requires_grad=True)
        x = Tensor(np.arange(12.0).reshape(2, 3, 2) / 10)
        (x @ w + b).sum().backward()
        np.testing.assert_allclose(b.grad, [6.0, 6.0, 6.0])
        np.testing.assert_allclose(w.grad, np.repeat(x.data.reshape(-1, 2).sum(axis=0)[:, None], 3, axis=1))

    def test_getitem_fancy_index(self):
        x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
        x[[0, 0, 2]].sum().backward()
        np.testing.assert_allclose(x.grad, [[2, 2], [0, 0], [1, 1]])

    def test_concat_and_reshape(self):
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.zeros((2, 1)), requires_grad=True)
        out = concat([a, b], axis=-1).reshape(8)
        (out * np.arange(8.0)).sum().backward()
        np.testing.assert_allclose(a.grad, [[0, 1, 2], [4, 5, 6]])
        np.testing.assert_allclose(b.grad, [[3], [7]])

    def test_relu_sigmoid(self):
        x = Tensor(np.array([-1000.0, -1.0, 0.5, 1000.0]), requires_grad=True)
        s = sigmoid(x)
        assert np.all(np.isfinite(s.data)) and s.data[0] == 0.0 and s.data[-1] == 1.0
        (relu(x) + s).sum().backward()
        assert np.all(np.isfinite(x.grad))

    def test_no_grad(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with no_grad():
            assert not grad_enabled()
            y = x * 2.0
        assert grad_enabled()
        assert y._backward is None

    def test_backward_needs_scalar(self):
        with pytest.raises(ShapeError):
            Tensor(np.ones(2), requires_grad=True).backward()


class TestAdam:
    def test_first_step_is_lr_times_sign(self):
        # bias-corrected m/sqrt(v) = g/|g| on step 1
        p = {"w": np.array([1.0, -2.0, 0.5])}
        adam_step(p, {"w": np.array([0.3, -4.0, 1e-3])}, AdamState(learning_rate=0.1, epsilon=1e-12))
        np.testing.assert_allclose(p["w"], [0.9, -1.9, 0.4], atol=1e-8)

    def test_matches_hand_recurrence(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=4)
        p = {"w": w.copy()}
        st = AdamState(learning_rate=0.01)
        m = np.zeros(4)
        v = np.zeros(4)
        for t in range(1, 6):
            g = rng.normal(size=4)
            adam_step(p, {"w": g}, st)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            w = w - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(p["w"], w, atol=1e-12)
        assert st.step_count == 5

    def test_nonfinite_is_atomic(self):
        p = {"a": np.ones(2), "b": np.ones(2)}
        with pytest.raises(NonFiniteGradientError) as err:
            adam_step(p, {"a": np.ones(2), "b": np.array([np.nan, 0.0])}, AdamState())
        assert err.value.param_name == "b" and err.value.step == 1
        assert p["a"].tolist() == [1.0, 1.0]

    def test_none_gradient_skipped(self):
        p = {"a": np.ones(2)}
        adam_step(p, {"a": None}, AdamState())
        assert p["a"].tolist() == [1.0, 1.0]

    def test_bad_hyperparameters(self):
        with pytest.raises(ConfigurationError):
            AdamState(learning_rate=0.0)
        with pytest.raises(ConfigurationError):
            AdamState(beta1=1.0)

    def test_minimizes_quadratic(self):
        x = Tensor(np.array([3.0, -2.0]), requires_grad=True)
        opt = Adam([("x", x)], lr=0.1)
        for _ in range(500):
            opt.zero_grad()
            (x * x).sum().backward()
            opt.step()
        assert np.abs(x.data).max() < 1e-2
