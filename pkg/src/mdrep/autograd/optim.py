"""Adam with bias correction and a reduce-on-plateau learning-rate scheduler."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor


class Adam:
    """Standard Adam. Moment buffers are keyed by parameter name so a subset
    of parameters (e.g. the encoders active in one step) can be updated
    without disturbing the others; bias correction tracks per-parameter
    update counts.
    """

    def __init__(self, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        if not lr > 0:
            raise ValueError("lr must be positive")
        if not (0 < beta1 < 1 and 0 < beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def step(self, params: dict[str, Tensor]) -> None:
        """Apply one update to every parameter in ``params`` (grads required)."""
        missing = [name for name, p in params.items() if p.grad is None]
        if missing:
            raise RuntimeError(f"parameters missing gradients: {missing[:3]}")
        for name, p in params.items():
            g = p.grad
            m = self._m.get(name)
            if m is None:
                m = self._m[name] = np.zeros_like(p.data)
                self._v[name] = np.zeros_like(p.data)
                self._t[name] = 0
            v = self._v[name]
            t = self._t[name] = self._t[name] + 1
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * np.square(g)
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype)
        self.step_count += 1


class PlateauScheduler:
    """Multiplies lr by ``factor`` once a (lower-is-better) metric stops
    improving for more than ``patience`` consecutive steps."""

    def __init__(self, lr: float, factor: float = 0.5, patience: int = 4,
                 min_lr: float = 0.0, threshold: float = 1e-8):
        if not 0 < factor < 1:
            raise ValueError("factor must lie in (0, 1)")
        if patience < 0:
            raise ValueError("patience must be non-negative")
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.threshold = threshold
        self.best_metric = math.inf
        self.epochs_since_improvement = 0

    def step(self, metric: float) -> float:
        """Record one epoch's metric; returns the (possibly reduced) lr."""
        if not math.isfinite(metric):
            raise ValueError("metric must be finite")
        if metric < self.best_metric - self.threshold:
            self.best_metric = metric
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1
        if self.epochs_since_improvement > self.patience:
            self.lr = max(self.lr * self.factor, self.min_lr)
            self.epochs_since_improvement = 0
        return self.lr
