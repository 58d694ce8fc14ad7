"""Per-channel GCN encoders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ShapeError


def glorot(shape, rng: np.random.Generator) -> np.ndarray:
    """Uniform Glorot/Xavier initialization."""
    fan_in, fan_out = shape[0], shape[1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class GcnChannelParams:
    """Layer weights of one channel encoder; ``weights[0]`` is ``in_dim x h1``."""

    index: int
    weights: list

    @property
    def w0(self):
        return self.weights[0]

    @property
    def w1(self):
        return self.weights[-1]


def init_channel(in_dim: int, h1: int, h2: int, rng: np.random.Generator, index: int = 0,
                 num_layers: int = 2) -> GcnChannelParams:
    dims = [in_dim] + [h1] * (num_layers - 1) + [h2]
    return GcnChannelParams(index, [glorot((dims[i], dims[i + 1]), rng) for i in range(num_layers)])


def channel_forward(weights, a_hat, attrs, training=False, dropout=0.0, rng=None,
                    final_activation=False):
    """Z = A_hat . relu(A_hat . drop(attrs) . W0) . W1 (for two layers).

    ``weights`` may be arrays or tape tensors.  Dropout is applied to the input
    of every layer when ``training``.
    """
    if attrs.shape[0] != a_hat.shape[0]:
        raise ShapeError(f"attributes have {attrs.shape[0]} rows, adjacency {a_hat.shape[0]}")
    h = attrs
    last = len(weights) - 1
    for i, w in enumerate(weights):
        if ad.value_of(w).shape[0] != h.shape[1]:
            raise ShapeError(f"layer {i}: input width {h.shape[1]} vs weight {ad.value_of(w).shape}")
        h = ad.dropout(h, dropout, rng, training)
        h = ad.matmul(a_hat, ad.matmul(h, w))
        if i < last or final_activation:
            h = ad.relu(h)
    return h
