"""Adam with decoupled weight decay and a linear warmup/decay schedule."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, ShapeError
from .matrix import Parameter


def effective_lr(lr0: float, warmup_ratio: float, total_steps: int, step: int) -> float:
    """Learning rate at 0-based ``step``: linear ramp from 0 to lr0 over the
    first ceil(warmup_ratio * total_steps) steps, then linear decay reaching 0
    at total_steps."""
    warmup = math.ceil(warmup_ratio * total_steps)
    if step < warmup:
        return lr0 * (step + 1) / warmup
    if total_steps == warmup:
        return 0.0
    return lr0 * max(0.0, (total_steps - step) / (total_steps - warmup))


class AdamState:
    """Optimizer state: step counter, per-parameter moments, hyperparameters."""

    def __init__(
        self,
        params: list[Parameter],
        *,
        lr0: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        warmup_ratio: float = 0.0,
        total_steps: int,
    ):
        if total_steps <= 0:
            raise ConfigError(f"total_steps must be positive, got {total_steps}")
        if not 0.0 <= warmup_ratio <= 1.0:
            raise ConfigError(f"warmup_ratio must be in [0, 1], got {warmup_ratio}")
        self.step = 0
        self.lr0 = lr0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.warmup_ratio = warmup_ratio
        self.total_steps = total_steps
        self.m = [np.zeros_like(p.value.data) for p in params]
        self.v = [np.zeros_like(p.value.data) for p in params]
        self._shapes = [p.value.shape for p in params]


def adam_step(params: list[Parameter], state: AdamState) -> None:
    """One update from the gradients currently held in ``Parameter.grad``.

    Weight decay is decoupled: it is added to the update directly and never
    enters the moment estimates. Moments are bias-corrected.
    """
    if len(params) != len(state.m):
        raise ShapeError(
            f"adam_step: state built for {len(state.m)} parameters, got {len(params)}"
        )
    for p, shape in zip(params, state._shapes):
        if p.value.shape != shape:
            raise ShapeError(f"adam_step: parameter {p.name!r} changed shape")

    lr = effective_lr(state.lr0, state.warmup_ratio, state.total_steps, state.step)
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    for i, p in enumerate(params):
        g = p.grad.data
        state.m[i] *= b1
        state.m[i] += (1.0 - b1) * g
        state.v[i] *= b2
        state.v[i] += (1.0 - b2) * (g * g)
        m_hat = state.m[i] / (1.0 - b1**t)
        v_hat = state.v[i] / (1.0 - b2**t)
        update = m_hat / (np.sqrt(v_hat) + state.eps)
        if state.weight_decay != 0.0:
            update = update + state.weight_decay * p.value.data
        p.value.data -= lr * update
    state.step += 1
