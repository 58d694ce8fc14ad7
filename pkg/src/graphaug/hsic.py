"""HSIC disparity penalty between channel embeddings.

With the linear kernel K = Z Z^T the statistic tr(K_i H K_j H) / (n-1)^2
equals ||Z_i^T H Z_j||_F^2 / (n-1)^2, which costs O(n h^2) instead of O(n^2 h).
"""
from __future__ import annotations

import itertools

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ContractError, ShapeError

ALL_PAIRS = tuple(itertools.combinations(range(9), 2))


def hsic_pair(zi, zj) -> ad.Tensor:
    n = zi.shape[0]
    if zj.shape[0] != n:
        raise ShapeError(f"row counts differ: {n} vs {zj.shape[0]}")
    if n < 2:
        raise ContractError("HSIC needs at least two rows")
    ci = ad.center_rows(zi)
    cj = ad.center_rows(zj)
    # both orders summed, so swapping the arguments is bit-for-bit symmetric
    fwd = ad.sumsq(ad.matmul(ad.transpose(ci), cj))
    rev = ad.sumsq(ad.matmul(ad.transpose(cj), ci))
    return ad.scale(ad.add(fwd, rev), 0.5 / (n - 1) ** 2)


def sample_pairs(t: int, rng: np.random.Generator, n_channels: int = 9) -> list[tuple[int, int]]:
    """``t`` distinct unordered channel pairs, uniformly without replacement (0-based)."""
    pairs = list(itertools.combinations(range(n_channels), 2))
    if not 1 <= t <= len(pairs):
        raise ConfigError(f"t must be in [1, {len(pairs)}], got {t}")
    picked = rng.choice(len(pairs), size=t, replace=False)
    return [pairs[i] for i in picked]


def disparity_loss(z, pairs) -> ad.Tensor:
    total = ad.Tensor(np.array(0.0))
    for i, j in pairs:
        total = ad.add(total, hsic_pair(z[i], z[j]))
    return total


def mean_pairwise_hsic(z) -> float:
    """Average HSIC over all unordered pairs of the given embeddings."""
    pairs = list(itertools.combinations(range(len(z)), 2))
    if not pairs:
        return 0.0
    vals = [float(hsic_pair(ad.value_of(z[i]), ad.value_of(z[j])).value) for i, j in pairs]
    return float(np.mean(vals))
