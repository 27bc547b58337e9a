"""AdamW with decoupled weight decay, and the warmup+cosine LR schedule."""

from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError
from .tensor import Tensor


class AdamW:
    """Per-parameter first/second moment state plus the update rule.

    Moment buffers exist only for the parameters handed in (the trainable
    set). The update is plain float32 arithmetic, so identical inputs give
    bitwise identical results.
    """

    def __init__(self, params: Sequence[Tuple[str, Tensor]], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for _, p in self.params]
        self._v = [np.zeros_like(p.data) for _, p in self.params]

    def step(self, lr: Optional[float] = None):
        adamw_step(self, lr=lr)

    def zero_grad(self):
        for _, p in self.params:
            p.grad = None


def adamw_step(state: AdamW, lr: Optional[float] = None):
    """Apply one AdamW update to every parameter in `state`."""
    lr = state.lr if lr is None else lr
    t = state.step_count + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for (name, p), m, v in zip(state.params, state._m, state._v):
        if p.grad is None:
            raise ValidationError(f"parameter '{name}' has no gradient; run backward first")
        g = p.grad
        m *= np.float32(state.beta1)
        m += np.float32(1.0 - state.beta1) * g
        v *= np.float32(state.beta2)
        v += np.float32(1.0 - state.beta2) * (g * g)
        mhat = m / np.float32(bc1)
        vhat = v / np.float32(bc2)
        update = mhat / (np.sqrt(vhat) + np.float32(state.eps))
        if state.weight_decay:
            update = update + np.float32(state.weight_decay) * p.data
        p.data -= np.float32(lr) * update
    state.step_count = t


def lr_schedule(step: int, total_steps: int, peak_lr: float, warmup_ratio: float = 0.03) -> float:
    """Linear warmup to `peak_lr`, then cosine decay to zero.

    Warmup covers ceil(warmup_ratio * total_steps) steps; the value at the
    warmup boundary is exactly peak_lr and at `total_steps` exactly zero.
    """
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside [0, {total_steps}]")
    warmup = math.ceil(warmup_ratio * total_steps)
    if warmup > 0 and step < warmup:
        return peak_lr * step / warmup
    span = max(total_steps - warmup, 1)
    progress = (step - warmup) / span
    return peak_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
