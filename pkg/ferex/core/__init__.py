# Numeric core: tensors, layers, network, optimiser
from .network import (
    ForwardCaches,
    LayerParams,
    Parameters,
    backward,
    forward,
    init_params,
    predict_proba,
)
from .optim import OptimState, sgd_step

__all__ = [
    "ForwardCaches",
    "LayerParams",
    "Parameters",
    "backward",
    "forward",
    "init_params",
    "predict_proba",
    "OptimState",
    "sgd_step",
]
