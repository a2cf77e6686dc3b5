"""
Tests for the network layers, including finite-difference gradient checks.

Conv and linear layers are checked on dyadic values (multiples of 1/8) with a
step of 2**-10, so every float32 operation is exact and the central
difference equals the analytic gradient.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ferex.core.layers import (
    conv_backward,
    conv_forward,
    linear_backward,
    linear_forward,
    maxpool_backward,
    maxpool_forward,
    relu_backward,
    relu_forward,
    softmax_xent,
)
from ferex.errors import DataValidationError, ShapeError

EPS = 2.0**-10


def _dyadic(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return (rng.integers(-8, 9, size=shape) / 8).astype(np.float32)


def _numeric_grad(fn, x: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Central differences of scalar fn with respect to every entry of x."""
    grad = np.zeros(x.shape, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        plus = x.copy()
        minus = x.copy()
        plus[idx] += eps
        minus[idx] -= eps
        grad[idx] = (fn(plus) - fn(minus)) / (2 * eps)
    return grad


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(analytic.astype(np.float64) - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(diff / scale)


class TestConv:
    """Tests for conv_forward and conv_backward."""

    def test_hand_example(self):
        """Diagonal 2x2 kernel over 1..9 gives [[6,8],[12,14]]."""
        x = np.arange(1, 10, dtype=np.float32).reshape(1, 1, 3, 3)
        w = np.array([[1, 0], [0, 1]], dtype=np.float32).reshape(1, 1, 2, 2)
        out, _ = conv_forward(x, w, np.zeros(1, np.float32), stride=1, pad=0)
        assert_array_equal(out[0, 0], [[6, 8], [12, 14]])

    def test_identity_kernel(self):
        """A 1x1 kernel of value 1 reproduces the input."""
        x = np.random.default_rng(0).uniform(size=(2, 1, 4, 4)).astype(np.float32)
        out, _ = conv_forward(x, np.ones((1, 1, 1, 1), np.float32), np.zeros(1, np.float32), 1, 0)
        assert_array_equal(out, x)

    def test_zero_weight_gives_bias(self):
        """Zero weights output the bias everywhere."""
        x = np.ones((1, 2, 4, 4), np.float32)
        bias = np.array([0.5, -2.0], np.float32)
        out, _ = conv_forward(x, np.zeros((2, 2, 3, 3), np.float32), bias, 1, 1)
        assert_array_equal(out[0, 0], 0.5)
        assert_array_equal(out[0, 1], -2.0)

    def test_same_padding_preserves_size(self):
        """3x3 kernel, stride 1, pad 1 keeps HxW."""
        out, _ = conv_forward(
            np.zeros((2, 3, 8, 8), np.float32),
            np.zeros((4, 3, 3, 3), np.float32),
            np.zeros(4, np.float32),
        )
        assert out.shape == (2, 4, 8, 8)

    def test_matches_sliding_window_in_float64(self):
        """100 random shapes, kernels, paddings and strides agree with explicit window sums."""
        rng = np.random.default_rng(11)
        for _ in range(100):
            k = int(rng.integers(1, 4))
            pad = int(rng.integers(0, 2))
            stride = int(rng.integers(1, 3))
            h, w = (int(v) for v in rng.integers(k, 9, size=2))
            # stride must tile the padded input exactly
            h -= (h + 2 * pad - k) % stride
            w -= (w + 2 * pad - k) % stride
            n, c_in, c_out = (int(v) for v in rng.integers(1, 4, size=3))
            x = rng.uniform(-1, 1, size=(n, c_in, h, w)).astype(np.float32)
            weight = rng.uniform(-1, 1, size=(c_out, c_in, k, k)).astype(np.float32)
            bias = rng.uniform(-1, 1, size=c_out).astype(np.float32)

            out, _ = conv_forward(x, weight, bias, stride=stride, pad=pad)

            padded = np.pad(x.astype(np.float64), ((0, 0), (0, 0), (pad, pad), (pad, pad)))
            out_h = (h + 2 * pad - k) // stride + 1
            out_w = (w + 2 * pad - k) // stride + 1
            expected = np.empty((n, c_out, out_h, out_w))
            for i in range(out_h):
                for j in range(out_w):
                    window = padded[:, :, i * stride : i * stride + k, j * stride : j * stride + k]
                    expected[:, :, i, j] = np.einsum("ncij,ocij->no", window, weight.astype(np.float64))
            expected += bias.astype(np.float64)[np.newaxis, :, np.newaxis, np.newaxis]
            assert out.shape == expected.shape
            assert_allclose(out, expected, rtol=0, atol=1e-4)

    def test_channel_mismatch(self):
        """Input channels must match the weight."""
        with pytest.raises(ShapeError):
            conv_forward(
                np.zeros((1, 2, 4, 4), np.float32),
                np.zeros((1, 3, 3, 3), np.float32),
                np.zeros(1, np.float32),
            )

    def test_grad_bias_is_channel_sum(self):
        """grad_bias is the per-channel sum of grad_out."""
        rng = np.random.default_rng(1)
        x = rng.uniform(size=(2, 1, 4, 4)).astype(np.float32)
        out, cache = conv_forward(x, rng.uniform(size=(3, 1, 3, 3)).astype(np.float32), np.zeros(3, np.float32))
        g = rng.uniform(size=out.shape).astype(np.float32)
        _, _, grad_b = conv_backward(g, cache)
        assert_allclose(grad_b, g.sum(axis=(0, 2, 3)), rtol=1e-6)

    def test_single_pixel_chain_rule(self):
        """Single pixel, 1x1 kernel: grad_weight == grad_out * input."""
        x = np.array([[[[3.0]]]], np.float32)
        _, cache = conv_forward(x, np.array([[[[2.0]]]], np.float32), np.zeros(1, np.float32), 1, 0)
        _, grad_w, _ = conv_backward(np.array([[[[5.0]]]], np.float32), cache)
        assert grad_w.item() == 15.0

    def test_finite_differences(self):
        """Random 1x2x5x5 input: input and weight gradients match central differences."""
        rng = np.random.default_rng(2)
        x = _dyadic(rng, (1, 2, 5, 5))
        w = _dyadic(rng, (3, 2, 3, 3))
        b = _dyadic(rng, (3,))
        r = rng.integers(-4, 5, size=(1, 3, 5, 5)).astype(np.float32)

        def loss_x(xv):
            return float(np.sum(conv_forward(xv, w, b)[0].astype(np.float64) * r))

        def loss_w(wv):
            return float(np.sum(conv_forward(x, wv, b)[0].astype(np.float64) * r))

        def loss_b(bv):
            return float(np.sum(conv_forward(x, w, bv)[0].astype(np.float64) * r))

        _, cache = conv_forward(x, w, b)
        grad_x, grad_w, grad_b = conv_backward(r, cache)
        assert _rel_err(grad_x, _numeric_grad(loss_x, x)) < 1e-3
        assert _rel_err(grad_w, _numeric_grad(loss_w, w)) < 1e-3
        assert _rel_err(grad_b, _numeric_grad(loss_b, b)) < 1e-3

    def test_backward_shape_check(self):
        """A gradient of the wrong shape is rejected."""
        _, cache = conv_forward(
            np.zeros((1, 1, 4, 4), np.float32), np.zeros((2, 1, 3, 3), np.float32), np.zeros(2, np.float32)
        )
        with pytest.raises(ShapeError):
            conv_backward(np.zeros((1, 3, 4, 4), np.float32), cache)


class TestRelu:
    """Tests for relu_forward and relu_backward."""

    def test_forward(self):
        """[-1,0,2] -> [0,0,2]."""
        out, _ = relu_forward(np.array([-1, 0, 2], np.float32))
        assert_array_equal(out, [0, 0, 2])

    def test_backward_zero_rule(self):
        """Gradient passes only where x > 0; x == 0 blocks it."""
        _, cache = relu_forward(np.array([-1, 0, 2], np.float32))
        assert_array_equal(relu_backward(np.array([5, 5, 5], np.float32), cache), [0, 0, 5])

    def test_finite_differences_away_from_zero(self):
        """Away from the kink the gradient matches central differences."""
        rng = np.random.default_rng(3)
        magnitudes = rng.integers(1, 9, size=(4, 6)) / 8
        signs = rng.choice([-1.0, 1.0], size=(4, 6))
        x = (magnitudes * signs).astype(np.float32)
        r = rng.integers(-4, 5, size=x.shape).astype(np.float32)

        def loss(xv):
            return float(np.sum(relu_forward(xv)[0].astype(np.float64) * r))

        _, cache = relu_forward(x)
        assert _rel_err(relu_backward(r, cache), _numeric_grad(loss, x)) < 1e-3


class TestMaxPool:
    """Tests for maxpool_forward and maxpool_backward."""

    def test_forward_and_route(self):
        """[[1,2],[3,4]] -> 4 and the gradient goes to the 4."""
        x = np.array([[[[1, 2], [3, 4]]]], np.float32)
        out, cache = maxpool_forward(x)
        assert out.item() == 4
        grad = maxpool_backward(np.ones((1, 1, 1, 1), np.float32), cache)
        assert_array_equal(grad[0, 0], [[0, 0], [0, 1]])

    def test_tie_goes_to_top_left(self):
        """An all-equal window routes the gradient to its top-left cell."""
        x = np.full((1, 1, 2, 2), 7, np.float32)
        out, cache = maxpool_forward(x)
        assert out.item() == 7
        grad = maxpool_backward(np.ones((1, 1, 1, 1), np.float32), cache)
        assert_array_equal(grad[0, 0], [[1, 0], [0, 0]])

    def test_matches_brute_force(self):
        """Random 4x4 input matches explicit window enumeration exactly."""
        x = np.random.default_rng(4).uniform(size=(2, 3, 4, 4)).astype(np.float32)
        out, _ = maxpool_forward(x)
        for n in range(2):
            for c in range(3):
                for i in range(2):
                    for j in range(2):
                        window = x[n, c, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
                        assert out[n, c, i, j] == window.max()

    def test_odd_size_rejected(self):
        """Odd height or width is a ShapeError."""
        with pytest.raises(ShapeError):
            maxpool_forward(np.zeros((1, 1, 3, 4), np.float32))

    def test_backward_conserves_gradient(self):
        """Each pooled gradient lands on exactly one input cell."""
        rng = np.random.default_rng(5)
        x = rng.uniform(size=(1, 2, 6, 6)).astype(np.float32)
        out, cache = maxpool_forward(x)
        g = rng.uniform(size=out.shape).astype(np.float32)
        grad = maxpool_backward(g, cache)
        assert grad.sum() == pytest.approx(g.sum(), rel=1e-6)
        assert np.count_nonzero(grad) == g.size


class TestLinear:
    """Tests for linear_forward and linear_backward."""

    def test_identity(self):
        """W = I, b = 0 reproduces x."""
        x = np.random.default_rng(6).uniform(size=(3, 4)).astype(np.float32)
        y, _ = linear_forward(x, np.eye(4, dtype=np.float32), np.zeros(4, np.float32))
        assert_array_equal(y, x)

    def test_hand_example(self):
        """W=[[1,2]], b=[1], x=[3,4] -> [12]."""
        y, _ = linear_forward(
            np.array([[3, 4]], np.float32), np.array([[1, 2]], np.float32), np.array([1], np.float32)
        )
        assert_array_equal(y, [[12]])

    def test_width_mismatch(self):
        """Input width must equal the weight's in-dim."""
        with pytest.raises(ShapeError):
            linear_forward(np.zeros((1, 3), np.float32), np.zeros((2, 4), np.float32), np.zeros(2, np.float32))

    def test_finite_differences(self):
        """Random 8 -> 4 layer: all gradients match central differences."""
        rng = np.random.default_rng(7)
        x = _dyadic(rng, (5, 8))
        w = _dyadic(rng, (4, 8))
        b = _dyadic(rng, (4,))
        r = rng.integers(-4, 5, size=(5, 4)).astype(np.float32)

        def loss(xv, wv, bv):
            return float(np.sum(linear_forward(xv, wv, bv)[0].astype(np.float64) * r))

        _, cache = linear_forward(x, w, b)
        grad_x, grad_w, grad_b = linear_backward(r, cache)
        assert _rel_err(grad_x, _numeric_grad(lambda v: loss(v, w, b), x)) < 1e-3
        assert _rel_err(grad_w, _numeric_grad(lambda v: loss(x, v, b), w)) < 1e-3
        assert _rel_err(grad_b, _numeric_grad(lambda v: loss(x, w, v), b)) < 1e-3


class TestSoftmaxXent:
    """Tests for softmax_xent."""

    def test_uniform_logits(self):
        """Zero logits give probabilities 1/3 and loss ln 3."""
        loss, _, probs = softmax_xent(np.zeros((1, 3), np.float32), [0])
        assert_allclose(probs, [[1 / 3, 1 / 3, 1 / 3]], rtol=1e-6)
        assert loss == pytest.approx(math.log(3), abs=1e-6)

    def test_large_logit_is_stable(self):
        """Logits [1000,0,0] with label 0 give loss ~0 without overflow."""
        loss, grad, probs = softmax_xent(np.array([[1000, 0, 0]], np.float32), [0])
        assert loss == pytest.approx(0.0, abs=1e-6)
        assert np.all(np.isfinite(grad))
        assert np.all(np.isfinite(probs))

    def test_gradient_formula(self):
        """grad_logits == (probs - onehot) / N."""
        logits = np.array([[1, 2, 3], [0, 0, 1]], np.float32)
        _, grad, probs = softmax_xent(logits, [2, 0])
        onehot = np.array([[0, 0, 1], [1, 0, 0]], np.float32)
        assert_allclose(grad, (probs - onehot) / 2, atol=1e-6)

    def test_finite_differences(self):
        """Random batch: analytic gradient matches central differences of the loss."""
        rng = np.random.default_rng(8)
        logits = rng.normal(size=(6, 3))
        labels = rng.integers(0, 3, size=6)
        _, grad, _ = softmax_xent(logits, labels)
        numeric = _numeric_grad(lambda v: softmax_xent(v, labels)[0], logits, eps=1e-3)
        assert _rel_err(grad, numeric) < 1e-3

    def test_label_out_of_range(self):
        """Labels outside {0,1,2} are a DataValidationError."""
        with pytest.raises(DataValidationError):
            softmax_xent(np.zeros((1, 3), np.float32), [3])
