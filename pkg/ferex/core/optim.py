"""
Stochastic gradient descent with momentum.

    v <- momentum * v + g
    w <- w - lr * v
"""

from dataclasses import dataclass

import numpy as np

from ferex.core.network import LayerParams, Parameters
from ferex.errors import ShapeError
from ferex.models.schemas import SgdConfig


@dataclass
class OptimState:
    velocity: Parameters

    @classmethod
    def zeros_like(cls, params: Parameters) -> "OptimState":
        return cls(velocity=params.zeros_like())


def _check_mirrors(params: Parameters, other: Parameters, what: str) -> None:
    p_tensors, o_tensors = params.tensors(), other.tensors()
    if len(p_tensors) != len(o_tensors):
        raise ShapeError(f"{what}: expected {len(p_tensors)} tensors, got {len(o_tensors)}")
    for (name, p), o in zip(params.named_tensors(), o_tensors):
        if p.shape != o.shape:
            raise ShapeError(f"{what}: {name} has shape {o.shape}, parameter is {p.shape}")


def sgd_step(
    params: Parameters, grads: Parameters, state: OptimState, config: SgdConfig
) -> tuple[Parameters, OptimState]:
    """One update over every parameter tensor. Returns new params and state; inputs are untouched."""
    _check_mirrors(params, grads, "gradients")
    _check_mirrors(params, state.velocity, "optimizer state")
    lr = np.float32(config.learning_rate)
    momentum = np.float32(config.momentum)

    new_layers: list[LayerParams] = []
    new_velocity: list[LayerParams] = []
    for p, g, v in zip(params.layers(), grads.layers(), state.velocity.layers()):
        vw = momentum * v.weight + g.weight
        vb = momentum * v.bias + g.bias
        new_velocity.append(LayerParams(vw, vb))
        new_layers.append(LayerParams(p.weight - lr * vw, p.bias - lr * vb))

    n_conv = len(params.conv)
    return (
        Parameters(conv=new_layers[:n_conv], fc=new_layers[n_conv:]),
        OptimState(velocity=Parameters(conv=new_velocity[:n_conv], fc=new_velocity[n_conv:])),
    )
