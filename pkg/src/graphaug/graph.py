"""Graph container, train/val/test splits and the renormalized adjacency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ContractError, ValidationError

UNLABELED = -1


def symmetrize_binary(adj) -> sp.csr_matrix:
    """Union of both edge directions, binary weights, empty diagonal."""
    adj = sp.csr_matrix(adj, dtype=np.float64)
    adj = adj.maximum(adj.T).tocsr()
    adj.setdiag(0)
    adj.eliminate_zeros()
    adj.data[:] = 1.0
    adj.sort_indices()
    return adj


@dataclass(frozen=True)
class Graph:
    """Undirected attributed graph with (partially) labeled nodes.

    ``labels`` holds a class id per node, or ``UNLABELED``.
    """

    adjacency: sp.csr_matrix
    attributes: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        n = self.adjacency.shape[0]
        if n < 1 or self.adjacency.shape != (n, n):
            raise ValidationError(f"adjacency must be square and non-empty, got {self.adjacency.shape}")
        if self.attributes.ndim != 2 or self.attributes.shape[0] != n:
            raise ValidationError(f"attributes must have {n} rows, got {self.attributes.shape}")
        values = self.attributes.data if sp.issparse(self.attributes) else self.attributes
        if not np.isfinite(values).all():
            raise ValidationError("attributes must be finite")
        if self.labels.shape != (n,):
            raise ValidationError(f"labels must have length {n}")
        if (self.labels >= self.num_classes).any() or (self.labels < UNLABELED).any():
            raise ValidationError(f"labels must lie in [0, {self.num_classes}) or be unlabeled")
        if abs(self.adjacency - self.adjacency.T).sum() != 0:
            raise ValidationError("adjacency must be symmetric")
        if self.adjacency.diagonal().any():
            raise ValidationError("adjacency must have an empty diagonal")

    @classmethod
    def from_edges(cls, n, edges, attributes, labels, num_classes=None) -> "Graph":
        """Build a graph from an iterable of ``(u, v)`` pairs.

        Directions are merged and duplicates/self-loops dropped.
        """
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValidationError(f"edge endpoint outside [0, {n})")
        adj = sp.coo_matrix(
            (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
        )
        labels = np.asarray(labels, dtype=np.int64)
        if num_classes is None:
            num_classes = int(labels.max()) + 1 if (labels >= 0).any() else 0
        return cls(symmetrize_binary(adj), np.asarray(attributes, dtype=np.float64), labels, num_classes)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def edge_list(self) -> np.ndarray:
        """Undirected edges as ``(u, v)`` rows with ``u < v``."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.stack([upper.row[order], upper.col[order]], axis=1)


@dataclass(frozen=True)
class SplitMasks:
    """Disjoint node-index arrays for training, validation and test."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        sets = [set(self.train.tolist()), set(self.val.tolist()), set(self.test.tolist())]
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise ValidationError("split index sets must be pairwise disjoint")

    def check_labeled(self, labels: np.ndarray):
        if (labels[self.train] == UNLABELED).any():
            raise ValidationError("every training node must be labeled")


def normalize_adjacency(adj) -> sp.csr_matrix:
    """D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I."""
    adj = sp.csr_matrix(adj, dtype=np.float64)
    n, m = adj.shape
    if n != m:
        raise ContractError(f"adjacency must be square, got {adj.shape}")
    a_tilde = (adj + sp.identity(n, format="csr")).tocsr()
    deg = np.asarray(a_tilde.sum(axis=1)).ravel()
    d_inv_sqrt = sp.diags(1.0 / np.sqrt(deg))
    out = (d_inv_sqrt @ a_tilde @ d_inv_sqrt).tocsr()
    out.sort_indices()
    return out


def make_splits(
    graph: Graph,
    labels_per_class: int,
    val_size: int,
    test_size: int,
    rng: np.random.Generator,
) -> SplitMasks:
    """Class-balanced training set; validation and test drawn uniformly from the rest."""
    labels = graph.labels
    train = []
    for c in range(graph.num_classes):
        members = np.flatnonzero(labels == c)
        if len(members) < labels_per_class:
            raise ConfigError(
                f"class {c} has {len(members)} labeled nodes, need {labels_per_class}"
            )
        train.append(rng.choice(members, size=labels_per_class, replace=False))
    train = np.sort(np.concatenate(train)) if train else np.empty(0, dtype=np.int64)
    rest = np.setdiff1d(np.arange(graph.n), train)
    # val/test nodes must carry labels to be evaluated
    rest = rest[labels[rest] != UNLABELED]
    if len(rest) < val_size + test_size:
        raise ConfigError(
            f"only {len(rest)} labeled nodes remain for val={val_size} + test={test_size}"
        )
    picked = rng.permutation(rest)[: val_size + test_size]
    return SplitMasks(
        train=train.astype(np.int64),
        val=np.sort(picked[:val_size]).astype(np.int64),
        test=np.sort(picked[val_size:]).astype(np.int64),
    )
