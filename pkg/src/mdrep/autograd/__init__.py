"""Minimal reverse-mode autodiff engine with the layer set the classifiers need."""

from .checkpoint import load_params, save_params
from .functional import (
    BatchNormState,
    batchnorm2d,
    conv2d,
    leaky_relu,
    linear,
    softmax,
    softmax_cross_entropy,
)
from .optim import Adam, PlateauScheduler
from .tensor import (
    Tensor,
    backward,
    concat,
    set_finite_checks,
    take_column,
    zero_grads,
)

__all__ = [
    "Tensor", "backward", "concat", "take_column", "zero_grads", "set_finite_checks",
    "conv2d", "batchnorm2d", "leaky_relu", "linear", "softmax", "softmax_cross_entropy",
    "BatchNormState", "Adam", "PlateauScheduler", "save_params", "load_params",
]
