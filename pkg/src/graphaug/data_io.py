"""Plain-text graph/matrix formats, dataset loaders and the synthetic generator.

File formats
------------
edge list
    One ``u<TAB>v`` pair of 0-based node ids per line; any whitespace is
    accepted on read.  Lines starting with ``#`` and blank lines are ignored.
    Edges are symmetrized and deduplicated.
matrix file (dense)
    Header ``rows cols``, then ``rows`` lines of ``cols`` whitespace-separated
    decimals.
matrix file (sparse)
    Header ``rows cols nnz``, then ``nnz`` lines ``i j v`` (0-based).
label file
    ``node_id class_id`` per line; nodes not listed are unlabeled.
split file
    ``node_id split`` per line with ``split`` one of ``train``, ``val``,
    ``test``.

Decimals are written with 17 significant digits so every float64 survives a
write/read round trip unchanged.
"""
from __future__ import annotations

import json
import os
import pickle
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ParseError, ValidationError
from .graph import UNLABELED, Graph, SplitMasks

FLOAT_FMT = "%.17g"
SPLIT_NAMES = ("train", "val", "test")
DATA_ENV = "GRAPHAUG_DATA"


def _content_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def _ints(parts, path, lineno, count=None):
    if count is not None and len(parts) != count:
        raise ParseError(f"expected {count} fields, got {len(parts)}", path, lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"expected integers, got {' '.join(parts)!r}", path, lineno) from None


# ---------------------------------------------------------------------------
# edge lists


def read_edge_list(path, n: int | None = None) -> np.ndarray:
    """Return an ``E x 2`` array of the raw pairs in the file."""
    edges = []
    for lineno, line in _content_lines(path):
        u, v = _ints(line.split(), path, lineno, 2)
        if u < 0 or v < 0 or (n is not None and (u >= n or v >= n)):
            raise ValidationError(f"{path}:{lineno}: node id out of range [0, {n})")
        edges.append((u, v))
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def write_edge_list(path, edges):
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in edges:
            fh.write(f"{int(u)}\t{int(v)}\n")


# ---------------------------------------------------------------------------
# matrices


def write_matrix(path, m):
    """Dense arrays use the dense layout, scipy sparse matrices the triple layout."""
    with open(path, "w", encoding="utf-8") as fh:
        if sp.issparse(m):
            coo = sp.coo_matrix(m)
            order = np.lexsort((coo.col, coo.row))
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{i} {j} {FLOAT_FMT % v}\n")
        else:
            m = np.atleast_2d(np.asarray(m, dtype=np.float64))
            fh.write(f"{m.shape[0]} {m.shape[1]}\n")
            np.savetxt(fh, m, fmt=FLOAT_FMT, delimiter=" ")


def read_matrix(path):
    """Read either matrix layout; sparse files come back as CSR."""
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("empty matrix file", path) from None
    dims = _ints(header.split(), path, lineno)
    if len(dims) == 2:
        rows, cols = dims
        out = np.empty((rows, cols))
        r = 0
        for lineno, line in lines:
            if r >= rows:
                raise ParseError(f"more than {rows} data rows", path, lineno)
            parts = line.split()
            if len(parts) != cols:
                raise ParseError(f"expected {cols} values, got {len(parts)}", path, lineno)
            try:
                out[r] = [float(p) for p in parts]
            except ValueError:
                raise ParseError("non-numeric value", path, lineno) from None
            r += 1
        if r != rows:
            raise ParseError(f"expected {rows} data rows, got {r}", path)
        return out
    if len(dims) == 3:
        rows, cols, nnz = dims
        ii, jj, vv = [], [], []
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'i j v'", path, lineno)
            i, j = _ints(parts[:2], path, lineno)
            try:
                v = float(parts[2])
            except ValueError:
                raise ParseError("non-numeric value", path, lineno) from None
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValidationError(f"{path}:{lineno}: index ({i}, {j}) outside {rows}x{cols}")
            ii.append(i)
            jj.append(j)
            vv.append(v)
        if len(vv) != nnz:
            raise ParseError(f"header announces {nnz} entries, found {len(vv)}", path)
        m = sp.csr_matrix((vv, (ii, jj)), shape=(rows, cols))
        m.sort_indices()
        return m
    raise ParseError(f"header must be 'rows cols' or 'rows cols nnz', got {header!r}", path, lineno)


# ---------------------------------------------------------------------------
# labels and splits


def read_labels(path, n: int, num_classes: int | None = None) -> np.ndarray:
    labels = np.full(n, UNLABELED, dtype=np.int64)
    for lineno, line in _content_lines(path):
        node, cls = _ints(line.split(), path, lineno, 2)
        if not 0 <= node < n:
            raise ValidationError(f"{path}:{lineno}: node id {node} out of range [0, {n})")
        if cls < 0 or (num_classes is not None and cls >= num_classes):
            raise ValidationError(f"{path}:{lineno}: class {cls} out of range")
        labels[node] = cls
    return labels


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8") as fh:
        for node, cls in enumerate(labels):
            if cls != UNLABELED:
                fh.write(f"{node} {int(cls)}\n")


def read_split(path, n: int) -> SplitMasks:
    groups = {name: [] for name in SPLIT_NAMES}
    for lineno, line in _content_lines(path):
        parts = line.split()
        if len(parts) != 2 or parts[1] not in groups:
            raise ParseError("expected 'node_id train|val|test'", path, lineno)
        (node,) = _ints(parts[:1], path, lineno)
        if not 0 <= node < n:
            raise ValidationError(f"{path}:{lineno}: node id {node} out of range [0, {n})")
        groups[parts[1]].append(node)
    return SplitMasks(*(np.asarray(sorted(groups[s]), dtype=np.int64) for s in SPLIT_NAMES))


def write_split(path, splits: SplitMasks):
    with open(path, "w", encoding="utf-8") as fh:
        for name in SPLIT_NAMES:
            for node in getattr(splits, name):
                fh.write(f"{int(node)} {name}\n")


# ---------------------------------------------------------------------------
# whole graphs


def write_graph(graph: Graph, directory):
    """Write ``edges.txt``, ``features.txt`` and ``labels.txt`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edge_list(d / "edges.txt", graph.edge_list())
    write_matrix(d / "features.txt", graph.attributes)
    write_labels(d / "labels.txt", graph.labels)


def load_from_files(edges, features, labels, num_classes: int | None = None) -> Graph:
    feats = read_matrix(features)
    if sp.issparse(feats):
        feats = feats.toarray()
    n = feats.shape[0]
    lab = read_labels(labels, n, num_classes)
    if num_classes is None:
        num_classes = int(lab.max()) + 1 if (lab >= 0).any() else 0
    return Graph.from_edges(n, read_edge_list(edges, n), feats, lab, num_classes)


def _load_planetoid(directory: Path, name: str) -> Graph:
    """Planetoid pickles (``ind.<name>.x`` ...), with the usual Citeseer gap fix."""

    def load(suffix):
        with open(directory / f"ind.{name}.{suffix}", "rb") as fh:
            return pickle.load(fh, encoding="latin1")

    x, y, tx, ty, allx, ally, graph = (load(s) for s in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_idx = [int(line) for line in open(directory / f"ind.{name}.test.index", encoding="utf-8")]
    test_sorted = np.sort(test_idx)
    lo, hi = test_sorted[0], test_sorted[-1]
    full = hi - lo + 1
    if full != len(test_idx):
        # isolated test nodes are missing from tx/ty: pad them with zeros
        tx_ext = sp.lil_matrix((full, tx.shape[1]))
        tx_ext[test_sorted - lo, :] = tx
        tx = tx_ext
        ty_ext = np.zeros((full, ty.shape[1]))
        ty_ext[test_sorted - lo, :] = ty
        ty = ty_ext
    feats = sp.vstack((allx, tx)).tolil()
    feats[test_idx, :] = feats[test_sorted, :]
    onehot = np.vstack((ally, ty))
    onehot[test_idx, :] = onehot[test_sorted, :]
    n = feats.shape[0]
    labels = np.where(onehot.sum(axis=1) > 0, onehot.argmax(axis=1), UNLABELED)
    edges = [(u, v) for u, nbrs in graph.items() for v in nbrs if u < n and v < n]
    return Graph.from_edges(n, edges, feats.toarray(), labels, onehot.shape[1])


def _load_feature_label_edge(directory: Path, name: str) -> Graph:
    """``<name>.feature`` (dense rows), ``<name>.label`` (one per line), ``<name>.edge``."""
    feats = np.loadtxt(directory / f"{name}.feature", dtype=np.float64, ndmin=2)
    labels = np.loadtxt(directory / f"{name}.label", dtype=np.int64, ndmin=1)
    n = feats.shape[0]
    if labels.shape != (n,):
        raise ValidationError(f"{name}.label has {labels.shape[0]} entries for {n} nodes")
    edges = read_edge_list(directory / f"{name}.edge", n)
    return Graph.from_edges(n, edges, feats, labels, int(labels.max()) + 1)


def data_root() -> Path:
    return Path(os.environ.get(DATA_ENV, "data"))


def load_dataset(name_or_paths) -> Graph:
    """Load a graph from a dataset directory, a dataset name, or explicit paths.

    ``name_or_paths`` may be a mapping with ``edges``/``features``/``labels``
    keys, a directory, or a bare name looked up under ``$GRAPHAUG_DATA``
    (default ``./data``).  Directories may hold Planetoid pickles, the
    ``<name>.feature/.label/.edge`` layout, or ``edges.txt``/``features.txt``/
    ``labels.txt``.
    """
    if isinstance(name_or_paths, dict):
        return load_from_files(name_or_paths["edges"], name_or_paths["features"], name_or_paths["labels"])
    path = Path(name_or_paths)
    if not path.is_dir():
        path = data_root() / str(name_or_paths)
    if not path.is_dir():
        raise FileNotFoundError(f"dataset {name_or_paths!r} not found (looked in {path})")
    name = path.name.lower()
    for candidate in (name, path.name):
        if (path / f"ind.{candidate}.x").exists():
            return _load_planetoid(path, candidate)
        if (path / f"{candidate}.feature").exists():
            return _load_feature_label_edge(path, candidate)
    if (path / "features.txt").exists():
        return load_from_files(path / "edges.txt", path / "features.txt", path / "labels.txt")
    raise FileNotFoundError(f"no recognised dataset layout in {path}")


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_MAGIC = "# graphaug checkpoint v1"


def write_checkpoint(path, named_arrays, meta: dict):
    """Text checkpoint: magic line, one JSON ``meta`` line, then each parameter
    as ``param <name> <rows> <cols>`` followed by its rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CHECKPOINT_MAGIC + "\n")
        fh.write("meta " + json.dumps(meta, sort_keys=True) + "\n")
        for name, arr in named_arrays:
            arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
            fh.write(f"param {name} {arr.shape[0]} {arr.shape[1]}\n")
            np.savetxt(fh, arr, fmt=FLOAT_FMT, delimiter=" ")


def read_checkpoint(path) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ParseError("not a graphaug checkpoint", path, 1)
    if len(lines) < 2 or not lines[1].startswith("meta "):
        raise ParseError("missing meta line", path, 2)
    meta = json.loads(lines[1][5:])
    params = []
    i = 2
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) != 4 or parts[0] != "param":
            raise ParseError("expected 'param <name> <rows> <cols>'", path, i + 1)
        rows, cols = _ints(parts[2:], path, i + 1)
        block = lines[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise ParseError(f"parameter {parts[1]} truncated", path, i + 1)
        arr = np.array([[float(v) for v in row.split()] for row in block]).reshape(rows, cols)
        params.append((parts[1], arr))
        i += 1 + rows
    return meta, params


# ---------------------------------------------------------------------------
# synthetic graphs

CORRELATION_MODES = ("attributes", "topology", "both")


@dataclass(frozen=True)
class SyntheticSpec:
    """Planted-partition graph with Gaussian node attributes.

    ``correlation_mode`` selects what carries label information:
    ``attributes`` -- class-separated attribute centers, label-blind edges at
    the same overall density; ``topology`` -- p_intra/p_inter edges, attributes
    from one class-independent Gaussian; ``both`` -- both signals.
    """

    n_per_class: int = 30
    num_classes: int = 3
    p_intra: float = 0.03
    p_inter: float = 0.01
    attr_dim: int = 50
    center_distance: float = 3.0
    cov_scale: float = 1.0
    correlation_mode: str = "both"

    def validate(self) -> "SyntheticSpec":
        if self.n_per_class < 1 or self.num_classes < 1 or self.attr_dim < 1:
            raise ConfigError("n_per_class, num_classes and attr_dim must be positive")
        for p in (self.p_intra, self.p_inter):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"edge probability {p} outside [0, 1]")
        if self.cov_scale < 0:
            raise ConfigError("cov_scale must be non-negative")
        if self.correlation_mode not in CORRELATION_MODES:
            raise ConfigError(f"correlation_mode must be one of {CORRELATION_MODES}")
        return self

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def generate_synthetic(spec: SyntheticSpec, rng: np.random.Generator) -> Graph:
    spec.validate()
    c, n = spec.num_classes, spec.n_per_class * spec.num_classes
    labels = rng.permutation(np.repeat(np.arange(c), spec.n_per_class))

    same = labels[:, None] == labels[None, :]
    if spec.correlation_mode == "attributes":
        n_same = spec.num_classes * spec.n_per_class * (spec.n_per_class - 1) / 2
        n_pairs = n * (n - 1) / 2
        p = (spec.p_intra * n_same + spec.p_inter * (n_pairs - n_same)) / n_pairs if n_pairs else 0.0
        prob = np.full((n, n), p)
    else:
        prob = np.where(same, spec.p_intra, spec.p_inter)
    draws = rng.random((n, n)) < prob
    upper = np.triu(draws, k=1)
    rows, cols = np.nonzero(upper)

    centers = np.zeros((c, spec.attr_dim))
    if spec.correlation_mode != "topology":
        for k in range(c):
            centers[k, k % spec.attr_dim] = spec.center_distance
    noise = rng.normal(scale=np.sqrt(spec.cov_scale), size=(n, spec.attr_dim))
    attrs = centers[labels] + noise
    return Graph.from_edges(n, np.stack([rows, cols], axis=1), attrs, labels, c)
