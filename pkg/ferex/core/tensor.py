"""
Dense float32 tensors and the numeric kernels every layer is built from.

A tensor is a C-contiguous numpy float32 array of rank 1-4. Kernels are pure:
they never modify their inputs and always return freshly allocated arrays.
"""

from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from ferex.errors import NonFiniteError, ShapeError

Tensor = NDArray[np.float32]
Shape = tuple[int, ...]

MAX_RANK = 4


def validate_shape(shape: Sequence[int]) -> Shape:
    dims = tuple(int(d) for d in shape)
    if not 1 <= len(dims) <= MAX_RANK:
        raise ShapeError(f"shape must have 1-{MAX_RANK} dims, got {dims}")
    if any(d < 1 for d in dims):
        raise ShapeError(f"every dim must be >= 1, got {dims}")
    return dims


def as_tensor(values, shape: Sequence[int] | None = None) -> Tensor:
    """Copy values into a new float32 tensor, checking rank and finiteness."""
    arr = np.array(values, dtype=np.float32, order="C")
    if shape is not None:
        dims = validate_shape(shape)
        if arr.size != int(np.prod(dims)):
            raise ShapeError(f"cannot view {arr.size} values as shape {dims}")
        arr = arr.reshape(dims)
    validate_shape(arr.shape)
    ensure_finite(arr, "tensor")
    return arr


def ensure_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains NaN or Inf values")


def zeros(shape: Sequence[int]) -> Tensor:
    return np.zeros(validate_shape(shape), dtype=np.float32)


def ones(shape: Sequence[int]) -> Tensor:
    return np.ones(validate_shape(shape), dtype=np.float32)


def _require_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    return np.add(a, b, dtype=np.float32)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "mul")
    return np.multiply(a, b, dtype=np.float32)


def scale(a: Tensor, factor: float) -> Tensor:
    return np.multiply(a, np.float32(factor), dtype=np.float32)


def map_elements(a: Tensor, fn: Callable[[np.ndarray], np.ndarray]) -> Tensor:
    """Apply a vectorised function pointwise; the result must keep a's shape."""
    out = np.asarray(fn(a.copy()), dtype=np.float32)
    _require_same_shape(a, out, "map")
    return out


def add_inplace(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add_inplace")
    np.add(a, b, out=a)
    return a


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    [m,k] x [k,n] -> [m,n] with float32 accumulation.

    Summation order is left to the linked BLAS, so results are bitwise
    repeatable on one machine and numpy build but may differ in the last
    bits across platforms.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} x {b.shape}")
    return np.matmul(a, b, dtype=np.float32)


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    span = size + 2 * pad - kernel
    if span < 0 or span % stride:
        raise ShapeError(
            f"kernel {kernel} with stride {stride} and pad {pad} does not tile input size {size}"
        )
    return span // stride + 1


def _unfold(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """[N,C,H,W] -> [N, C*kh*kw, out_h*out_w]; rows ordered (c, i, j), columns row-major."""
    n, c, h, w = x.shape
    out_h = conv_output_size(h, kh, stride, pad)
    out_w = conv_output_size(w, kw, stride, pad)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((n, c, kh, kw, out_h, out_w), dtype=np.float32)
    for i in range(kh):
        i_end = i + stride * out_h
        for j in range(kw):
            j_end = j + stride * out_w
            cols[:, :, i, j] = x[:, :, i:i_end:stride, j:j_end:stride]
    return cols.reshape(n, c * kh * kw, out_h * out_w)


def _fold(
    cols: np.ndarray, input_shape: Shape, kh: int, kw: int, stride: int, pad: int
) -> np.ndarray:
    """Adjoint of _unfold: scatter-add columns back into [N,C,H,W]."""
    n, c, h, w = input_shape
    out_h = conv_output_size(h, kh, stride, pad)
    out_w = conv_output_size(w, kw, stride, pad)
    if cols.shape != (n, c * kh * kw, out_h * out_w):
        raise ShapeError(
            f"col2im: columns {cols.shape} do not match input {input_shape} "
            f"with kernel {kh}x{kw}"
        )
    cols = cols.reshape(n, c, kh, kw, out_h, out_w)
    padded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=np.float32)
    for i in range(kh):
        i_end = i + stride * out_h
        for j in range(kw):
            j_end = j + stride * out_w
            padded[:, :, i:i_end:stride, j:j_end:stride] += cols[:, :, i, j]
    if pad:
        return padded[:, :, pad : pad + h, pad : pad + w].copy()
    return padded


def im2col(x: Tensor, kernel_h: int, kernel_w: int, stride: int = 1, pad: int = 0) -> Tensor:
    """
    Lower convolution patches to columns.

    [C,H,W] -> [C*kh*kw, out_h*out_w]; a batched [N,C,H,W] input gives
    [N, C*kh*kw, out_h*out_w]. Out-of-bounds offsets are zero.
    """
    if x.ndim == 3:
        return _unfold(x[np.newaxis], kernel_h, kernel_w, stride, pad)[0]
    if x.ndim == 4:
        return _unfold(x, kernel_h, kernel_w, stride, pad)
    raise ShapeError(f"im2col expects [C,H,W] or [N,C,H,W], got {x.shape}")


def col2im(
    cols: Tensor,
    input_shape: Sequence[int],
    kernel_h: int,
    kernel_w: int,
    stride: int = 1,
    pad: int = 0,
) -> Tensor:
    """Adjoint of im2col: overlapping patch entries are summed back into the input grid."""
    dims = validate_shape(input_shape)
    if len(dims) == 3:
        return _fold(cols[np.newaxis], (1, *dims), kernel_h, kernel_w, stride, pad)[0]
    if len(dims) == 4:
        return _fold(cols, dims, kernel_h, kernel_w, stride, pad)
    raise ShapeError(f"col2im expects a [C,H,W] or [N,C,H,W] input shape, got {dims}")
