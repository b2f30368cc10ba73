"""Autodiff tape checks against central finite differences and closed forms."""

import numpy as np
import pytest

from reachtube.nn import tensor as T


# --- oracle -----------------------------------------------------------------


def numeric_grad(fn, array, eps=1e-6):
    """Central-difference gradient of scalar ``fn()`` w.r.t. ``array`` (in place)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        up = fn()
        flat[i] = saved - eps
        down = fn()
        flat[i] = saved
        grad.reshape(-1)[i] = (up - down) / (2.0 * eps)
    return grad


def rel_err(analytic, numeric):
    return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-10)


def check_op(build_loss, arrays, tol=1e-6):
    """FD-check the gradient of ``build_loss(tensors...)`` for every input array."""
    tensors = [T.Tensor(a) for a in arrays]
    loss = build_loss(*tensors)
    loss.backward()
    for tensor, array in zip(tensors, arrays):
        numeric = numeric_grad(lambda: build_loss(*[T.Tensor(a) for a in arrays]).item(), array)
        assert tensor.grad is not None
        assert rel_err(tensor.grad, numeric) < tol


def weighted(out, rng):
    """Scalar readout with non-uniform weights so every entry matters."""
    weights = rng.standard_normal(out.data.shape)
    return T.mean(T.mul(out, T.Tensor(weights)))


# --- elementwise and structural ops -----------------------------------------


class TestElementwise:
    def test_add_sub_mul_values(self):
        a = T.Tensor(np.array([1.0, 2.0]))
        b = T.Tensor(np.array([3.0, 5.0]))
        assert np.array_equal(T.add(a, b).data, [4.0, 7.0])
        assert np.array_equal(T.sub(a, b).data, [-2.0, -3.0])
        assert np.array_equal(T.mul(a, b).data, [3.0, 10.0])

    @pytest.mark.parametrize("op", [T.add, T.sub, T.mul])
    def test_binary_grads(self, op):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4))
        w = rng.standard_normal((3, 4))
        check_op(lambda x, y: T.mean(T.mul(op(x, y), T.Tensor(w))), [a, b])

    def test_broadcast_bias_grad(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 3))
        bias = rng.standard_normal(3)
        w = rng.standard_normal((5, 3))
        check_op(lambda a, b: T.mean(T.mul(T.add(a, b), T.Tensor(w))), [x, bias])

    def test_scalar_constant_mul(self):
        x = T.Tensor(np.array([2.0, -1.0]))
        out = T.mean(T.mul(x, 3.0))
        out.backward()
        assert np.allclose(x.grad, [1.5, 1.5])

    def test_gelu_values_and_grad(self):
        # GELU is ~x for large x, ~0 for very negative x, 0 at 0
        x = T.Tensor(np.array([0.0, 10.0, -10.0]))
        y = T.gelu(x)
        assert abs(y.data[0]) < 1e-12
        assert abs(y.data[1] - 10.0) < 1e-6
        assert abs(y.data[2]) < 1e-6
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 3))
        check_op(lambda t: weighted(T.gelu(t), np.random.default_rng(7)), [a])


class TestMatmulReshape:
    def test_matmul_value(self):
        a = np.arange(6.0).reshape(2, 3)
        b = np.arange(12.0).reshape(3, 4)
        assert np.array_equal(T.matmul(T.Tensor(a), T.Tensor(b)).data, a @ b)

    def test_matmul_grads(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((3, 5))
        w = rng.standard_normal((4, 5))
        check_op(lambda x, y: T.mean(T.mul(T.matmul(x, y), T.Tensor(w))), [a, b])

    def test_matmul_rejects_non_2d(self):
        with pytest.raises(ValueError):
            T.matmul(T.Tensor(np.zeros(3)), T.Tensor(np.zeros((3, 2))))

    def test_transpose_grad(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((3, 5))
        w = rng.standard_normal((5, 3))
        check_op(lambda x: T.mean(T.mul(T.transpose(x), T.Tensor(w))), [a])

    def test_reshape_round_trip_grad(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((2, 6))
        w = rng.standard_normal((3, 4))
        check_op(lambda x: T.mean(T.mul(T.reshape(x, (3, 4)), T.Tensor(w))), [a])


class TestLayernormMean:
    def test_layernorm_normalizes(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((7, 5)) * 4.0 + 2.0
        out = T.layernorm(T.Tensor(x), T.Tensor(np.ones(5)), T.Tensor(np.zeros(5))).data
        assert np.allclose(out.mean(axis=-1), 0.0, atol=1e-12)
        assert np.allclose(out.var(axis=-1), 1.0, atol=1e-4)

    def test_layernorm_grads(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((4, 6))
        gain = rng.standard_normal(6)
        bias = rng.standard_normal(6)
        w = rng.standard_normal((4, 6))
        check_op(
            lambda a, g, b: T.mean(T.mul(T.layernorm(a, g, b), T.Tensor(w))),
            [x, gain, bias],
            tol=1e-5,
        )

    def test_mean_grad(self):
        x = T.Tensor(np.arange(6.0).reshape(2, 3))
        out = T.mean(x)
        out.backward()
        assert out.item() == pytest.approx(2.5)
        assert np.allclose(x.grad, 1.0 / 6.0)


# --- graph mechanics --------------------------------------------------------


class TestGraph:
    def test_affine_mse_closed_form(self):
        # loss = mean((xW + b - y)^2); grad_W = 2 x^T (pred - y) / size, grad_b = col-sum
        rng = np.random.default_rng(8)
        x = rng.standard_normal((6, 3))
        y = rng.standard_normal((6, 2))
        w = T.Tensor(rng.standard_normal((3, 2)))
        b = T.Tensor(rng.standard_normal(2))
        pred = T.add(T.matmul(T.Tensor(x), w), b)
        diff = T.sub(pred, T.Tensor(y))
        loss = T.mean(T.mul(diff, diff))
        loss.backward()
        residual = (x @ w.data + b.data) - y
        grad_w = 2.0 * x.T @ residual / residual.size
        grad_b = 2.0 * residual.sum(axis=0) / residual.size
        assert np.allclose(w.grad, grad_w, atol=1e-10)
        assert np.allclose(b.grad, grad_b, atol=1e-10)

    def test_shared_node_grad_sums(self):
        x = T.Tensor(np.array([1.0, 2.0]))
        out = T.mean(T.add(x, x))
        out.backward()
        assert np.allclose(x.grad, 1.0)  # 2 paths x 0.5 mean weight

    def test_grads_accumulate_across_backwards(self):
        x = T.Tensor(np.array([1.0, 2.0]))
        T.mean(x).backward()
        first = x.grad.copy()
        T.mean(x).backward()
        assert np.allclose(x.grad, 2.0 * first)
        x.zero_grad()
        assert x.grad is None

    def test_backward_requires_scalar(self):
        with pytest.raises(ValueError):
            T.Tensor(np.zeros(3)).backward()

    def test_deep_chain_no_recursion_limit(self):
        x = T.Tensor(np.array([1.0]))
        out = x
        for _ in range(5000):
            out = T.add(out, 0.0)
        T.mean(out).backward()
        assert np.allclose(x.grad, 1.0)

    def test_float32_graph_keeps_dtype(self):
        x = T.Tensor(np.ones((2, 2), dtype=np.float32))
        w = T.Tensor(np.ones((2, 2), dtype=np.float32))
        out = T.mean(T.gelu(T.matmul(x, w)))
        assert out.data.dtype == np.float32
        out.backward()
        assert x.grad.dtype == np.float32
        T.mean(T.matmul(x, w)).backward()
        assert x.grad.dtype == np.float32
