"""
Network layers with explicit forward and backward passes.

Each *_forward returns its output plus a cache; the matching *_backward takes
the upstream gradient and that cache and returns gradients for the layer's
inputs and parameters. Nothing here mutates its arguments.
"""

from dataclasses import dataclass

import numpy as np

from ferex.core.tensor import Tensor, col2im, conv_output_size, im2col
from ferex.errors import DataValidationError, ShapeError


@dataclass(frozen=True)
class ConvCache:
    input_shape: tuple[int, int, int, int]
    cols: np.ndarray  # [N, C*kh*kw, out_h*out_w]
    weight: Tensor
    stride: int
    pad: int


@dataclass(frozen=True)
class ReluCache:
    x: Tensor


@dataclass(frozen=True)
class PoolCache:
    input_shape: tuple[int, int, int, int]
    argmax: np.ndarray  # [N, C, H/2, W/2] index 0..3 within each window, row-major


@dataclass(frozen=True)
class LinearCache:
    x: Tensor
    weight: Tensor


LayerCache = ConvCache | ReluCache | PoolCache | LinearCache


def conv_forward(
    x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, pad: int = 1
) -> tuple[Tensor, ConvCache]:
    """Cross-correlation of [N,C,H,W] with [C_out,C,kh,kw] via im2col, plus per-channel bias."""
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv expects [N,C,H,W] input and 4-d weight, got {x.shape}, {weight.shape}")
    n, c, h, w = x.shape
    c_out, c_in, kh, kw = weight.shape
    if c != c_in:
        raise ShapeError(f"conv: input has {c} channels but weight expects {c_in}")
    if bias.shape != (c_out,):
        raise ShapeError(f"conv: bias shape {bias.shape} does not match {c_out} output channels")
    out_h = conv_output_size(h, kh, stride, pad)
    out_w = conv_output_size(w, kw, stride, pad)

    cols = im2col(x, kh, kw, stride, pad)
    out = np.matmul(weight.reshape(c_out, -1), cols, dtype=np.float32)
    out += bias[np.newaxis, :, np.newaxis]
    cache = ConvCache(input_shape=(n, c, h, w), cols=cols, weight=weight, stride=stride, pad=pad)
    return out.reshape(n, c_out, out_h, out_w), cache


def conv_backward(grad_out: Tensor, cache: ConvCache) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (grad_x, grad_weight, grad_bias)."""
    n, c, h, w = cache.input_shape
    c_out, _, kh, kw = cache.weight.shape
    positions = cache.cols.shape[2]
    if grad_out.ndim != 4 or grad_out.shape[:2] != (n, c_out) or (
        grad_out.shape[2] * grad_out.shape[3] != positions
    ):
        raise ShapeError(f"conv backward: gradient {grad_out.shape} does not match cached forward")
    g = grad_out.reshape(n, c_out, positions)

    grad_bias = g.sum(axis=(0, 2), dtype=np.float32)
    # sum over the batch of g[n] @ cols[n].T
    grad_weight = np.tensordot(g, cache.cols, axes=([0, 2], [0, 2]))
    grad_cols = np.matmul(cache.weight.reshape(c_out, -1).T, g, dtype=np.float32)
    grad_x = col2im(grad_cols, cache.input_shape, kh, kw, cache.stride, cache.pad)
    return grad_x, grad_weight.reshape(cache.weight.shape).astype(np.float32), grad_bias


def relu_forward(x: Tensor) -> tuple[Tensor, ReluCache]:
    return np.maximum(x, np.float32(0.0)), ReluCache(x=x)


def relu_backward(grad_out: Tensor, cache: ReluCache) -> Tensor:
    if grad_out.shape != cache.x.shape:
        raise ShapeError(f"relu backward: gradient {grad_out.shape} vs input {cache.x.shape}")
    # subgradient at exactly zero is 0
    return np.where(cache.x > 0, grad_out, np.float32(0.0)).astype(np.float32)


def maxpool_forward(x: Tensor) -> tuple[Tensor, PoolCache]:
    """2x2 stride-2 max pool. Ties go to the first window position in row-major order."""
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects [N,C,H,W], got {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool needs even height and width, got {h}x{w}")
    windows = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(n, c, h // 2, w // 2, 4)
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., np.newaxis], axis=-1)[..., 0]
    return out.astype(np.float32), PoolCache(input_shape=(n, c, h, w), argmax=argmax)


def maxpool_backward(grad_out: Tensor, cache: PoolCache) -> Tensor:
    n, c, h, w = cache.input_shape
    if grad_out.shape != (n, c, h // 2, w // 2):
        raise ShapeError(
            f"maxpool backward: gradient {grad_out.shape} does not match pooled shape "
            f"{(n, c, h // 2, w // 2)}"
        )
    routed = np.zeros((n, c, h // 2, w // 2, 4), dtype=np.float32)
    np.put_along_axis(routed, cache.argmax[..., np.newaxis], grad_out[..., np.newaxis], axis=-1)
    routed = routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return routed.reshape(n, c, h, w)


def linear_forward(x: Tensor, weight: Tensor, bias: Tensor) -> tuple[Tensor, LinearCache]:
    """y = x W^T + b for x [N,in], W [out,in], b [out]."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} does not fit weight {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"linear: bias {bias.shape} does not fit weight {weight.shape}")
    y = np.matmul(x, weight.T, dtype=np.float32) + bias
    return y, LinearCache(x=x, weight=weight)


def linear_backward(grad_out: Tensor, cache: LinearCache) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (grad_x, grad_weight, grad_bias)."""
    if grad_out.shape != (cache.x.shape[0], cache.weight.shape[0]):
        raise ShapeError(f"linear backward: gradient {grad_out.shape} does not match forward")
    grad_x = np.matmul(grad_out, cache.weight, dtype=np.float32)
    grad_weight = np.matmul(grad_out.T, cache.x, dtype=np.float32)
    grad_bias = grad_out.sum(axis=0, dtype=np.float32)
    return grad_x, grad_weight, grad_bias


def softmax(logits: Tensor) -> Tensor:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return (exp / exp.sum(axis=1, keepdims=True)).astype(np.float32)


def softmax_xent(logits: Tensor, labels) -> tuple[float, Tensor, Tensor]:
    """
    Mean softmax cross-entropy over a batch.

    Returns (loss, grad_logits, probs) where grad_logits = (probs - onehot) / N.
    """
    if logits.ndim != 2:
        raise ShapeError(f"softmax_xent expects [N,classes] logits, got {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    n, classes = logits.shape
    if labels.shape != (n,):
        raise DataValidationError(f"expected {n} labels, got shape {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= classes):
        raise DataValidationError(f"labels must lie in [0, {classes - 1}], got {labels.tolist()}")

    shifted = logits.astype(np.float64) - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(n)
    loss = float(-log_probs[rows, labels].mean())

    probs = np.exp(log_probs)
    grad = probs.copy()
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, grad.astype(np.float32), probs.astype(np.float32)
