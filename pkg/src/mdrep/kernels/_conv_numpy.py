"""NumPy implementation of the 2-D convolution kernels.

All three entry points operate on contiguous NCHW float arrays and share the
im2col/col2im formulation so the heavy arithmetic lands in BLAS matmuls.
Used as the fallback when the compiled core is unavailable.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided

BACKEND = "numpy"


def _out_size(n, kernel, stride, padding):
    return (n + 2 * padding - kernel) // stride + 1


def _im2col(xp, kh, kw, oh, ow, stride):
    """Gather sliding 3x3 patches into a (N*oh*ow, C*kh*kw) matrix."""
    n, c, _, _ = xp.shape
    s0, s1, s2, s3 = xp.strides
    patches = as_strided(
        xp,
        shape=(n, c, oh, ow, kh, kw),
        strides=(s0, s1, s2 * stride, s3 * stride, s2, s3),
    )
    # (n, oh, ow, c, kh, kw) ordering matches w.reshape(K, C*kh*kw)
    return np.ascontiguousarray(patches.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * oh * ow, c * kh * kw
    )


def conv2d_forward(x, w, b, stride, padding):
    n, c, h, wd = x.shape
    k, _, kh, kw = w.shape
    oh = _out_size(h, kh, stride, padding)
    ow = _out_size(wd, kw, stride, padding)
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    col = _im2col(xp, kh, kw, oh, ow, stride)
    out = col @ w.reshape(k, -1).T
    if b is not None:
        out += b
    return out.reshape(n, oh, ow, k).transpose(0, 3, 1, 2).copy()


def conv2d_backward_input(gout, w, x_shape, stride, padding):
    n, c, h, wd = x_shape
    k, _, kh, kw = w.shape
    _, _, oh, ow = gout.shape
    gcol = gout.transpose(0, 2, 3, 1).reshape(n * oh * ow, k) @ w.reshape(k, -1)
    gcol = gcol.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    hp, wp = h + 2 * padding, wd + 2 * padding
    gxp = np.zeros((n, c, hp, wp), dtype=gout.dtype)
    for i in range(kh):
        for j in range(kw):
            gxp[:, :, i : i + oh * stride : stride, j : j + ow * stride : stride] += (
                gcol[:, :, i, j]
            )
    return gxp[:, :, padding : padding + h, padding : padding + wd].copy()


def conv2d_backward_weight(x, gout, w_shape, stride, padding):
    n, c, h, wd = x.shape
    k, _, kh, kw = w_shape
    _, _, oh, ow = gout.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    col = _im2col(xp, kh, kw, oh, ow, stride)
    gw = gout.transpose(1, 0, 2, 3).reshape(k, n * oh * ow) @ col
    gb = gout.sum(axis=(0, 2, 3))
    return gw.reshape(w_shape), gb
