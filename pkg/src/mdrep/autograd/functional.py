"""Differentiable layers used by the classifiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from .tensor import Tensor

_KERNEL = 3


def conv2d(x: Tensor, w: Tensor, b: Tensor | None, stride: int = 2, padding: int = 1) -> Tensor:
    """3x3 cross-correlation with zero padding; defaults match the encoder blocks."""
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ValueError("conv2d expects NCHW input and KC33 weights")
    n, c, h, wd = x.data.shape
    k, cw, kh, kw = w.data.shape
    if (kh, kw) != (_KERNEL, _KERNEL):
        raise ValueError(f"kernel must be {_KERNEL}x{_KERNEL}")
    if cw != c:
        raise ValueError(f"weight expects {cw} input channels, input has {c}")
    if b is not None and b.data.shape != (k,):
        raise ValueError("bias must have one entry per output channel")
    if h < 2 or wd < 2:
        raise ValueError("spatial dimensions must be >= 2")

    xd = np.ascontiguousarray(x.data)
    wd_arr = np.ascontiguousarray(w.data)
    bd = None if b is None else np.ascontiguousarray(b.data)
    out = kernels.conv2d_forward(xd, wd_arr, bd, stride, padding)

    def vjp(g):
        g = np.ascontiguousarray(g)
        gx = gw = gb = None
        if x.requires_grad:
            gx = kernels.conv2d_backward_input(g, wd_arr, xd.shape, stride, padding)
        if w.requires_grad or (b is not None and b.requires_grad):
            gw, gb = kernels.conv2d_backward_weight(xd, g, wd_arr.shape, stride, padding)
        return (gx, gw, gb) if b is not None else (gx, gw)

    parents = (x, w, b) if b is not None else (x, w)
    return Tensor.from_op(out, parents, vjp)


@dataclass
class BatchNormState:
    """Running statistics; updated in train mode, read in eval mode."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @staticmethod
    def create(channels: int, dtype=np.float32) -> "BatchNormState":
        return BatchNormState(
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
        )


def batchnorm2d(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState,
                mode: str = "train") -> Tensor:
    """Per-channel batch normalization over (N, H, W)."""
    if x.data.ndim != 4:
        raise ValueError("batchnorm2d expects NCHW input")
    n, c, h, w = x.data.shape
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ValueError("gamma/beta must have one entry per channel")
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    gshape = (1, c, 1, 1)
    gam = gamma.data.reshape(gshape)

    if mode == "train":
        count = n * h * w
        if count < 2:
            raise ValueError("train-mode batchnorm needs more than one value per channel")
        mean = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        inv_std = 1.0 / np.sqrt(var + state.eps)
        xhat = (x.data - mean.reshape(gshape)) * inv_std.reshape(gshape)
        m = state.momentum
        state.running_mean[...] = (1 - m) * state.running_mean + m * mean
        state.running_var[...] = (1 - m) * state.running_var + m * var * count / (count - 1)

        def vjp(g):
            ggamma = (g * xhat).sum(axis=(0, 2, 3))
            gbeta = g.sum(axis=(0, 2, 3))
            gx = None
            if x.requires_grad:
                gmean = g.mean(axis=(0, 2, 3)).reshape(gshape)
                gdotx = (g * xhat).mean(axis=(0, 2, 3)).reshape(gshape)
                gx = (gam * inv_std.reshape(gshape)) * (g - gmean - xhat * gdotx)
            return gx, ggamma, gbeta

    else:
        inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
        xhat = (x.data - state.running_mean.reshape(gshape)) * inv_std.reshape(gshape)

        def vjp(g):
            ggamma = (g * xhat).sum(axis=(0, 2, 3))
            gbeta = g.sum(axis=(0, 2, 3))
            gx = gam * inv_std.reshape(gshape) * g if x.requires_grad else None
            return gx, ggamma, gbeta

    out = gam * xhat + beta.data.reshape(gshape)
    return Tensor.from_op(out, (x, gamma, beta), vjp)


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    mask = x.data > 0
    out = np.where(mask, x.data, slope * x.data)

    def vjp(g):
        return (np.where(mask, g, np.asarray(slope, dtype=g.dtype) * g),)

    return Tensor.from_op(out, (x,), vjp)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w + b with x (N, D) and w (D, M)."""
    if x.data.ndim != 2 or w.data.ndim != 2:
        raise ValueError("linear expects 2-D input and weights")
    if x.data.shape[1] != w.data.shape[0]:
        raise ValueError(
            f"input features {x.data.shape[1]} do not match weights {w.data.shape[0]}"
        )
    if b is not None and b.data.shape != (w.data.shape[1],):
        raise ValueError("bias must match the output dimension")
    out = x.data @ w.data
    if b is not None:
        out = out + b.data

    def vjp(g):
        gx = g @ w.data.T if x.requires_grad else None
        gw = x.data.T @ g if w.requires_grad else None
        if b is None:
            return gx, gw
        return gx, gw, g.sum(axis=0)

    parents = (x, w, b) if b is not None else (x, w)
    return Tensor.from_op(out, parents, vjp)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-softmax of the true class; max-subtracted for stability."""
    if logits.data.ndim != 2:
        raise ValueError("logits must be 2-D (batch, classes)")
    n, k = logits.data.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError("labels must be a vector matching the batch size")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = -log_probs[np.arange(n), labels].mean()

    def vjp(g):
        grad = np.exp(log_probs)
        grad[np.arange(n), labels] -= 1.0
        return (grad * (g / n),)

    return Tensor.from_op(np.asarray(loss, dtype=logits.data.dtype), (logits,), vjp)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Plain (non-differentiable) softmax used when reporting confidences."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)
