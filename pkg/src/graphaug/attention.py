"""Attention over channel embeddings.

Each channel i gets a score per node, ``q^T tanh(W_i z + b_i)``; a row-wise
softmax over channels turns the scores into fusion weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ShapeError
from .gcn import glorot


@dataclass
class AttentionParams:
    w: list  # per channel, h_att x h2
    b: list  # per channel, 1 x h_att (row vector so it broadcasts over nodes)
    q: np.ndarray  # h_att x 1


def init_attention(n_channels: int, h2: int, h_att: int, rng: np.random.Generator) -> AttentionParams:
    w = [glorot((h_att, h2), rng) for _ in range(n_channels)]
    b = [np.zeros((1, h_att)) for _ in range(n_channels)]
    return AttentionParams(w, b, glorot((h_att, 1), rng))


def attention_scores(w, b, q, z) -> ad.Tensor:
    """N x len(z) matrix of raw attention scores."""
    if not (len(w) == len(b) == len(z)):
        raise ShapeError(f"{len(z)} embeddings but {len(w)} transforms / {len(b)} biases")
    shape = z[0].shape
    cols = []
    for wi, bi, zi in zip(w, b, z):
        if zi.shape != shape:
            raise ShapeError(f"embedding shapes differ: {zi.shape} vs {shape}")
        hidden = ad.tanh(ad.add(ad.matmul(zi, ad.transpose(wi)), bi))
        cols.append(ad.matmul(hidden, q))
    return ad.hstack(cols)


def fuse(scores, z):
    """Softmax the scores per node and return ``(Z, alpha)``."""
    alpha = ad.softmax_rows(scores)
    if alpha.shape[1] != len(z):
        raise ShapeError(f"{alpha.shape[1]} score columns for {len(z)} embeddings")
    out = None
    for i, zi in enumerate(z):
        term = ad.mul(ad.column(alpha, i), zi)
        out = term if out is None else ad.add(out, term)
    return out, alpha


@dataclass
class AttentionReport:
    """Per-node fusion weights plus per-channel summary statistics."""

    alpha: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.alpha.mean(axis=0)

    @property
    def quartiles(self) -> np.ndarray:
        """3 x channels array of the 25th, 50th and 75th percentiles."""
        return np.percentile(self.alpha, [25, 50, 75], axis=0)
