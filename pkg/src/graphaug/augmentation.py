"""Synthesized graph features and the nine (adjacency, attribute) channel inputs.

From the (optionally densified) adjacency ``A`` and attributes ``X`` we build

* ``A_C``, ``X_C`` -- dense N x N cosine-similarity matrices of the rows of
  ``A`` and ``X``, used as new attribute matrices;
* ``A_T``, ``X_T`` -- binary kNN graphs over ``A_C`` and ``X_C``, used as new
  adjacency matrices.

Crossing the three adjacency sources with the three attribute sources gives
nine channels, enumerated row-major::

            X       A_C      X_C
    A       1        2        3
    A_T     4        5        6
    X_T     7        8        9
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ContractError
from .graph import Graph, normalize_adjacency, symmetrize_binary

ADJACENCY_SOURCES = ("A", "A_T", "X_T")
ATTRIBUTE_SOURCES = ("X", "A_C", "X_C")


def high_order_adjacency(adj) -> sp.csr_matrix:
    """Connect every pair of distinct nodes within two hops."""
    adj = sp.csr_matrix(adj, dtype=np.float64)
    reach = adj + adj @ adj
    reach.setdiag(0)
    reach.eliminate_zeros()
    reach.data[:] = 1.0
    reach.sort_indices()
    return reach.tocsr()


def cosine_cross(m) -> np.ndarray:
    """Pairwise cosine similarity of the rows of ``m`` (dense or sparse).

    All-zero rows are similar to nothing, themselves included: their row,
    column and diagonal entry are 0.
    """
    if sp.issparse(m):
        m = sp.csr_matrix(m, dtype=np.float64)
        norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
        inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        u = sp.diags(inv) @ m
        out = (u @ u.T).toarray()
    else:
        m = np.asarray(m, dtype=np.float64)
        norms = np.linalg.norm(m, axis=1)
        inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        u = m * inv[:, None]
        out = u @ u.T
    # mirror the upper triangle so the result is exactly symmetric
    out = np.triu(out) + np.triu(out, 1).T
    np.clip(out, -1.0, 1.0, out=out)
    diag = np.where(norms > 0, 1.0, 0.0)
    np.fill_diagonal(out, diag)
    return out


def knn_select(sim: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest off-diagonal entries of each row.

    Ties go to the lower column index.  Returns an ``N x k`` integer array.
    """
    sim = np.asarray(sim, dtype=np.float64)
    n = sim.shape[0]
    if sim.ndim != 2 or sim.shape[1] != n:
        raise ContractError(f"similarity matrix must be square, got {sim.shape}")
    if not 1 <= k < n:
        raise ConfigError(f"k must satisfy 1 <= k < N={n}, got {k}")
    masked = sim.copy()
    np.fill_diagonal(masked, -np.inf)
    # stable sort of negated values keeps lower indices first among ties
    order = np.argsort(-masked, axis=1, kind="stable")
    return order[:, :k]


def knn_binarize(sim: np.ndarray, k: int) -> sp.csr_matrix:
    """Binary kNN graph, symmetrized by union, with an empty diagonal."""
    nbrs = knn_select(sim, k)
    n = nbrs.shape[0]
    rows = np.repeat(np.arange(n), k)
    directed = sp.coo_matrix((np.ones(n * k), (rows, nbrs.ravel())), shape=(n, n))
    return symmetrize_binary(directed)


def row_normalize(m) -> np.ndarray:
    """Scale each row to unit L1 norm; zero rows stay zero."""
    if sp.issparse(m):
        m = m.toarray()
    m = np.asarray(m, dtype=np.float64)
    s = np.abs(m).sum(axis=1, keepdims=True)
    return np.divide(m, s, out=np.zeros_like(m), where=s > 0)


@dataclass(frozen=True)
class FeatureSet:
    a_high: sp.csr_matrix
    x: np.ndarray
    a_c: np.ndarray
    x_c: np.ndarray
    a_t: sp.csr_matrix
    x_t: sp.csr_matrix
    k: int

    def adjacency(self, source: str) -> sp.csr_matrix:
        return {"A": self.a_high, "A_T": self.a_t, "X_T": self.x_t}[source]

    def attribute(self, source: str) -> np.ndarray:
        return {"X": self.x, "A_C": self.a_c, "X_C": self.x_c}[source]


def build_feature_set(graph: Graph, k: int, densify: bool = True) -> FeatureSet:
    a = high_order_adjacency(graph.adjacency) if densify else graph.adjacency.copy()
    a_c = cosine_cross(a)
    x_c = cosine_cross(graph.attributes)
    return FeatureSet(
        a_high=a,
        x=np.asarray(graph.attributes, dtype=np.float64),
        a_c=a_c,
        x_c=x_c,
        a_t=knn_binarize(a_c, k),
        x_t=knn_binarize(x_c, k),
        k=k,
    )


@dataclass(frozen=True)
class ChannelSpec:
    index: int  # 1-based
    adjacency_source: str
    attribute_source: str

    @property
    def label(self) -> str:
        return f"G{self.index}({self.adjacency_source},{self.attribute_source})"


CHANNEL_SPECS = tuple(
    ChannelSpec(3 * r + c + 1, adj, att)
    for r, adj in enumerate(ADJACENCY_SOURCES)
    for c, att in enumerate(ATTRIBUTE_SOURCES)
)


@dataclass(frozen=True)
class Channel:
    """A channel spec with its propagation matrix and attribute input resolved."""

    spec: ChannelSpec
    a_hat: sp.csr_matrix
    attributes: np.ndarray

    @property
    def index(self) -> int:
        return self.spec.index


def enumerate_channels(fs: FeatureSet, normalize_attributes: bool = True, indices=None) -> list[Channel]:
    """Resolve the channels listed in ``indices`` (default: all nine, in order)."""
    wanted = range(1, 10) if indices is None else indices
    a_hat_cache: dict[str, sp.csr_matrix] = {}
    att_cache: dict[str, np.ndarray] = {}
    out = []
    for i in wanted:
        if not 1 <= i <= 9:
            raise ConfigError(f"channel index must be in 1..9, got {i}")
        spec = CHANNEL_SPECS[i - 1]
        if spec.adjacency_source not in a_hat_cache:
            a_hat_cache[spec.adjacency_source] = normalize_adjacency(fs.adjacency(spec.adjacency_source))
        if spec.attribute_source not in att_cache:
            att = fs.attribute(spec.attribute_source)
            att_cache[spec.attribute_source] = row_normalize(att) if normalize_attributes else att
        out.append(Channel(spec, a_hat_cache[spec.adjacency_source], att_cache[spec.attribute_source]))
    return out
