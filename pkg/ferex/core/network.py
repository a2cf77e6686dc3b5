"""
The expression-recognition network: parameter layout, initialisation, and
whole-model forward/backward passes.

Architecture (fixed layer counts, sizes from ModelConfig):
    4 x (conv 3x3 -> relu -> maxpool 2x2) -> flatten -> fc -> relu -> fc -> relu -> fc
"""

import hashlib
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from ferex.core import layers
from ferex.core.layers import LayerCache
from ferex.core.rng import STREAM_INIT, make_rng
from ferex.core.tensor import Tensor, ensure_finite
from ferex.errors import ShapeError
from ferex.models.schemas import ModelConfig


@dataclass
class LayerParams:
    weight: Tensor
    bias: Tensor


@dataclass
class Parameters:
    """Learnable tensors. Also used to carry gradients and optimiser velocities."""

    conv: list[LayerParams] = field(default_factory=list)
    fc: list[LayerParams] = field(default_factory=list)

    def layers(self) -> list[LayerParams]:
        return [*self.conv, *self.fc]

    def tensors(self) -> list[Tensor]:
        """Flat list in canonical order: conv1.w, conv1.b, ..., fc3.w, fc3.b."""
        flat = []
        for layer in self.layers():
            flat.extend((layer.weight, layer.bias))
        return flat

    def named_tensors(self) -> Iterator[tuple[str, Tensor]]:
        for i, layer in enumerate(self.conv, start=1):
            yield f"conv{i}.weight", layer.weight
            yield f"conv{i}.bias", layer.bias
        for i, layer in enumerate(self.fc, start=1):
            yield f"fc{i}.weight", layer.weight
            yield f"fc{i}.bias", layer.bias

    @classmethod
    def from_tensors(cls, config: ModelConfig, tensors: list[Tensor]) -> "Parameters":
        expected = expected_shapes(config)
        if len(tensors) != len(expected):
            raise ShapeError(f"expected {len(expected)} parameter tensors, got {len(tensors)}")
        for (name, shape), tensor in zip(expected, tensors):
            if tensor.shape != shape:
                raise ShapeError(f"{name}: expected shape {shape}, got {tensor.shape}")
        pairs = [LayerParams(tensors[i], tensors[i + 1]) for i in range(0, len(tensors), 2)]
        n_conv = len(config.conv_channels)
        return cls(conv=pairs[:n_conv], fc=pairs[n_conv:])

    def map(self, fn) -> "Parameters":
        return Parameters(
            conv=[LayerParams(fn(p.weight), fn(p.bias)) for p in self.conv],
            fc=[LayerParams(fn(p.weight), fn(p.bias)) for p in self.fc],
        )

    def zeros_like(self) -> "Parameters":
        return self.map(np.zeros_like)

    def copy(self) -> "Parameters":
        return self.map(np.copy)

    def digest(self) -> str:
        """SHA-256 over the little-endian float32 payload of every tensor, in canonical order."""
        h = hashlib.sha256()
        for tensor in self.tensors():
            h.update(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
        return h.hexdigest()


def expected_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for i, w_shape in enumerate(config.conv_shapes(), start=1):
        shapes.append((f"conv{i}.weight", w_shape))
        shapes.append((f"conv{i}.bias", (w_shape[0],)))
    for i, w_shape in enumerate(config.fc_shapes(), start=1):
        shapes.append((f"fc{i}.weight", w_shape))
        shapes.append((f"fc{i}.bias", (w_shape[0],)))
    return shapes


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def init_params(config: ModelConfig, seed: int) -> Parameters:
    """Fan-in scaled uniform weights in +-sqrt(6/fan_in), zero biases."""
    rng = make_rng(seed, STREAM_INIT)
    conv = []
    for shape in config.conv_shapes():
        fan_in = shape[1] * shape[2] * shape[3]
        conv.append(LayerParams(_uniform(rng, shape, fan_in), np.zeros(shape[0], np.float32)))
    fc = []
    for shape in config.fc_shapes():
        fc.append(LayerParams(_uniform(rng, shape, shape[1]), np.zeros(shape[0], np.float32)))
    return Parameters(conv=conv, fc=fc)


@dataclass
class ForwardCaches:
    conv: list[tuple[LayerCache, LayerCache, LayerCache]]  # (conv, relu, pool) per stage
    flatten_shape: tuple[int, ...]
    fc: list[tuple[LayerCache, LayerCache | None]]  # (linear, relu); head has no relu


def check_input(config: ModelConfig, x: Tensor) -> None:
    s = config.input_size
    if x.ndim != 4 or x.shape[1:] != (1, s, s):
        raise ShapeError(f"expected input [N,1,{s},{s}] for input_size {s}, got {list(x.shape)}")


def forward(config: ModelConfig, params: Parameters, x: Tensor) -> tuple[Tensor, ForwardCaches]:
    """Logits [N, num_classes] for a batch [N,1,S,S]."""
    check_input(config, x)
    h = np.ascontiguousarray(x, dtype=np.float32)
    conv_caches = []
    for layer in params.conv:
        h, c_cache = layers.conv_forward(h, layer.weight, layer.bias, config.stride, config.padding)
        h, r_cache = layers.relu_forward(h)
        h, p_cache = layers.maxpool_forward(h)
        conv_caches.append((c_cache, r_cache, p_cache))

    flatten_shape = h.shape
    h = h.reshape(h.shape[0], -1)

    fc_caches = []
    last = len(params.fc) - 1
    for i, layer in enumerate(params.fc):
        h, l_cache = layers.linear_forward(h, layer.weight, layer.bias)
        r_cache = None
        if i != last:
            h, r_cache = layers.relu_forward(h)
        fc_caches.append((l_cache, r_cache))

    ensure_finite(h, "logits")
    return h, ForwardCaches(conv=conv_caches, flatten_shape=flatten_shape, fc=fc_caches)


def backward(
    config: ModelConfig, params: Parameters, grad_logits: Tensor, caches: ForwardCaches
) -> Parameters:
    """Gradients of the loss with respect to every parameter, same layout as params."""
    n = caches.flatten_shape[0]
    if grad_logits.shape != (n, config.num_classes):
        raise ShapeError(
            f"expected logits gradient {(n, config.num_classes)}, got {grad_logits.shape}"
        )
    fc_grads: list[LayerParams] = []
    g = grad_logits
    for l_cache, r_cache in reversed(caches.fc):
        if r_cache is not None:
            g = layers.relu_backward(g, r_cache)
        g, gw, gb = layers.linear_backward(g, l_cache)
        fc_grads.append(LayerParams(gw, gb))

    g = g.reshape(caches.flatten_shape)
    conv_grads: list[LayerParams] = []
    for c_cache, r_cache, p_cache in reversed(caches.conv):
        g = layers.maxpool_backward(g, p_cache)
        g = layers.relu_backward(g, r_cache)
        g, gw, gb = layers.conv_backward(g, c_cache)
        conv_grads.append(LayerParams(gw, gb))

    return Parameters(conv=conv_grads[::-1], fc=fc_grads[::-1])


def predict_proba(
    config: ModelConfig, params: Parameters, images: Tensor, batch_size: int = 64
) -> tuple[Tensor, Tensor]:
    """Logits and softmax probabilities for [N,1,S,S], evaluated in fixed-size chunks."""
    check_input(config, images)
    logits = []
    for start in range(0, images.shape[0], batch_size):
        chunk_logits, _ = forward(config, params, images[start : start + batch_size])
        logits.append(chunk_logits)
    all_logits = np.concatenate(logits, axis=0)
    return all_logits, layers.softmax(all_logits)
