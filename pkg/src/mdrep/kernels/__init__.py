"""Hot convolution kernels with backend selection at import time.

The compiled Cython core is preferred when present; the NumPy implementation
is the fallback. ``MDREP_KERNELS=numpy`` (or ``compiled``) forces a backend.
Both expose the same three functions operating on contiguous NCHW arrays:

    conv2d_forward(x, w, b, stride, padding)      -> out
    conv2d_backward_input(gout, w, x_shape, ...)  -> grad_x
    conv2d_backward_weight(x, gout, w_shape, ...) -> (grad_w, grad_b)
"""

import os

from . import _conv_numpy

_FORCED = os.environ.get("MDREP_KERNELS", "").strip().lower()

_impl = None
if _FORCED != "numpy":
    try:
        from . import _convcore as _impl
    except ImportError:
        _impl = None
        if _FORCED == "compiled":
            raise
if _impl is None:
    _impl = _conv_numpy

BACKEND = _impl.BACKEND
conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_weight = _impl.conv2d_backward_weight


def available_backends():
    names = ["numpy"]
    try:
        from . import _convcore  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the named kernel module (for parity tests and benchmarks)."""
    if name == "numpy":
        return _conv_numpy
    if name == "compiled":
        from . import _convcore
        return _convcore
    raise ValueError(f"unknown kernel backend: {name!r}")
