"""Adam with decoupled weight decay."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass
class AdamState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **hyper) -> "AdamState":
        state = cls(**hyper)
        state.m = [np.zeros_like(p, dtype=np.float64) for p in params]
        state.v = [np.zeros_like(p, dtype=np.float64) for p in params]
        return state


def adam_step(state: AdamState, params, grads) -> list[np.ndarray]:
    """Return updated copies of ``params`` and advance ``state`` by one step.

    The decay term ``weight_decay * p`` is added to the adaptive update, not
    to the gradient fed into the moment estimates.
    """
    if not (len(params) == len(grads) == len(state.m)):
        raise ShapeError(
            f"adam_step: {len(params)} params, {len(grads)} grads, state for {len(state.m)}"
        )
    for p, g, m in zip(params, grads, state.m):
        if np.shape(p) != np.shape(g) or np.shape(p) != m.shape:
            raise ShapeError(f"adam_step: param {np.shape(p)} vs grad {np.shape(g)}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        v = state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        update = (m / c1) / (np.sqrt(v / c2) + state.eps)
        if state.weight_decay:
            update = update + state.weight_decay * p
        out.append(p - state.lr * update)
    return out
