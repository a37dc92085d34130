"""Attributed graphs: loading, normalized adjacency and feature propagation."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Malformed or missing dataset file; message carries file and line."""


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected graph in CSR form with a dense feature matrix.

    ``indptr``/``indices`` hold both directions of every edge, columns sorted
    within each row, no self-loops and no duplicates.
    """

    indptr: np.ndarray
    indices: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = None
    class_count: int = 0
    name: str = ""
    _adj: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n, edges, features, labels=None, class_count=None, name=""):
        """Build a graph from an iterable/array of (u, v) pairs.

        Edges are symmetrized and deduplicated; self-loops are dropped.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.shape[0] != n:
            raise ValueError(f"feature matrix has {features.shape[0]} rows, expected {n}")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError(f"edge endpoint out of range [0, {n})")
        edges = edges[edges[:, 0] != edges[:, 1]]
        both = np.concatenate([edges, edges[:, ::-1]])
        both = np.unique(both, axis=0)  # lexicographic: rows then sorted columns
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        indptr = np.cumsum(indptr)
        indices = both[:, 1].copy()
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(f"labels have shape {labels.shape}, expected ({n},)")
            if class_count is None:
                class_count = int(labels.max()) + 1 if n else 0
            if labels.size and (labels.min() < 0 or labels.max() >= class_count):
                raise ValueError(f"labels must lie in [0, {class_count})")
        return cls(indptr, indices, features, labels, int(class_count or 0), name)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        """Undirected edge count."""
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edge_list(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        mask = rows < self.indices
        return np.stack([rows[mask], self.indices[mask]], axis=1)

    def adjacency(self) -> sp.csr_matrix:
        if self._adj is None:
            data = np.ones(len(self.indices))
            adj = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def same_as(self, other: "AttributedGraph") -> bool:
        """Structural equality (edges, features, labels)."""
        if self.n != other.n or self.class_count != other.class_count:
            return False
        if not (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.features, other.features)):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


def normalized_adjacency(g: AttributedGraph) -> sp.csr_matrix:
    """S = (I+D)^-1/2 (A+I) (I+D)^-1/2 as a CSR matrix with sorted columns."""
    n = g.n
    inv_sqrt = 1.0 / np.sqrt(g.degrees + 1.0)
    a_hat = (g.adjacency() + sp.identity(n, format="csr")).tocsr()
    a_hat.sort_indices()
    rows = np.repeat(np.arange(n), np.diff(a_hat.indptr))
    data = inv_sqrt[rows] * inv_sqrt[a_hat.indices]
    s = sp.csr_matrix((data, a_hat.indices.copy(), a_hat.indptr.copy()), shape=(n, n))
    s.has_sorted_indices = True
    return s


def aggregate_features(s: sp.spmatrix, x: np.ndarray, hops: int = 2) -> np.ndarray:
    """Compute S^hops X by repeated sparse-dense products."""
    if hops < 0:
        raise ValueError("hops must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    if s.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: S is {s.shape}, X has {x.shape[0]} rows")
    out = x.copy()
    for _ in range(hops):
        out = np.asarray(s @ out)
    return out


def row_normalize(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit L1 norm; zero rows stay zero."""
    x = np.asarray(x, dtype=np.float64)
    sums = np.abs(x).sum(axis=1, keepdims=True)
    return np.divide(x, sums, out=np.zeros_like(x), where=sums > 0)


def homophily_ratio(g: AttributedGraph) -> float:
    """Fraction of undirected edges whose endpoints share a label."""
    if g.labels is None:
        raise ValueError("homophily requires labels")
    edges = g.edge_list()
    if len(edges) == 0:
        raise ValueError("homophily undefined on a graph without edges")
    same = g.labels[edges[:, 0]] == g.labels[edges[:, 1]]
    return float(same.mean())


# ---------------------------------------------------------------------------
# file formats


def _parse_int(token, path, lineno):
    try:
        value = int(token)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: non-integer token {token!r}") from None
    return value


def load_generic(dir_path) -> AttributedGraph:
    """Read edges.tsv / features.csv / labels.csv from a dataset directory."""
    root = Path(dir_path)
    paths = {name: root / name for name in ("edges.tsv", "features.csv", "labels.csv")}
    for p in paths.values():
        if not p.is_file():
            raise DatasetError(f"{p}: missing file")

    rows = []
    width = None
    with open(paths["features.csv"]) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            try:
                row = [float(t) for t in tokens]
            except ValueError:
                raise DatasetError(f"{paths['features.csv']}:{lineno}: non-numeric token") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DatasetError(
                    f"{paths['features.csv']}:{lineno}: ragged row ({len(row)} values, expected {width})")
            rows.append(row)
    features = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    n = features.shape[0]

    labels = []
    with open(paths["labels.csv"]) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if line:
                labels.append(_parse_int(line, paths["labels.csv"], lineno))
    if len(labels) != n:
        raise DatasetError(f"{paths['labels.csv']}: {len(labels)} labels for {n} feature rows")
    if any(y < 0 for y in labels):
        raise DatasetError(f"{paths['labels.csv']}: negative label")

    edges = []
    with open(paths["edges.tsv"]) as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise DatasetError(f"{paths['edges.tsv']}:{lineno}: expected 2 columns, got {len(tokens)}")
            u, v = (_parse_int(t, paths["edges.tsv"], lineno) for t in tokens)
            if u < 0 or v < 0 or u >= n or v >= n:
                raise DatasetError(f"{paths['edges.tsv']}:{lineno}: node id out of range [0, {n})")
            edges.append((u, v))

    class_count = max(labels) + 1 if labels else 0
    return AttributedGraph.from_edges(n, edges, features, labels, class_count, name=root.name)


def write_generic(g: AttributedGraph, dir_path) -> Path:
    """Write ``g`` in the generic directory format (plus meta.json)."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "edges.tsv", "w") as fh:
        for u, v in g.edge_list():
            fh.write(f"{u}\t{v}\n")
    with open(root / "features.csv", "w") as fh:
        for row in g.features:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    labels = g.labels if g.labels is not None else np.zeros(g.n, dtype=np.int64)
    with open(root / "labels.csv", "w") as fh:
        fh.writelines(f"{int(y)}\n" for y in labels)
    meta = {"n": g.n, "d": g.d, "classes": g.class_count}
    (root / "meta.json").write_text(json.dumps(meta) + "\n")
    return root


def ingest_cora_content(content_path, cites_path, out_dir=None) -> tuple[AttributedGraph, int]:
    """Parse the raw Planetoid citation format (``*.content`` + ``*.cites``).

    Returns the graph and the number of citation lines skipped because they
    reference an id absent from the content file. If ``out_dir`` is given the
    graph is also written there in the generic format.
    """
    ids: dict[str, int] = {}
    classes: dict[str, int] = {}
    rows, labels = [], []
    width = None
    with open(content_path) as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) < 3:
                raise DatasetError(f"{content_path}:{lineno}: malformed line")
            paper, bits, label = tokens[0], tokens[1:-1], tokens[-1]
            if width is None:
                width = len(bits)
            elif len(bits) != width:
                raise DatasetError(f"{content_path}:{lineno}: expected {width} features, got {len(bits)}")
            try:
                rows.append([float(b) for b in bits])
            except ValueError:
                raise DatasetError(f"{content_path}:{lineno}: non-numeric feature") from None
            if paper in ids:
                raise DatasetError(f"{content_path}:{lineno}: duplicate paper id {paper!r}")
            ids[paper] = len(ids)
            labels.append(classes.setdefault(label, len(classes)))
    if not ids:
        raise DatasetError(f"{content_path}: empty content file")

    edges, dangling = [], 0
    with open(cites_path) as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise DatasetError(f"{cites_path}:{lineno}: malformed line")
            cited, citing = tokens
            if cited not in ids or citing not in ids:
                dangling += 1
                continue
            edges.append((ids[cited], ids[citing]))
    if dangling:
        logger.warning("skipped %d citation(s) referencing unknown paper ids", dangling)

    name = Path(content_path).stem
    g = AttributedGraph.from_edges(len(ids), edges, np.array(rows), labels, len(classes), name=name)
    if out_dir is not None:
        write_generic(g, out_dir)
    return g, dangling


def load_dataset(path) -> AttributedGraph:
    """Load a generic directory, or a raw ``<name>.content``/``<name>.cites`` pair.

    ``path`` may be the generic directory, a directory holding the raw pair,
    or the ``.content`` file itself.
    """
    p = Path(path)
    if p.is_dir() and (p / "edges.tsv").is_file():
        return load_generic(p)
    if p.is_dir():
        contents = sorted(p.glob("*.content"))
        if len(contents) == 1:
            p = contents[0]
    if p.suffix == ".content" and p.is_file():
        cites = p.with_suffix(".cites")
        return ingest_cora_content(p, cites)[0]
    raise DatasetError(f"{path}: no generic dataset or .content/.cites pair found")


def find_dataset(name: str, roots=None) -> Path | None:
    """Search ``$GAL_DATA`` and ./data for a dataset called ``name``."""
    candidates = []
    if roots is None:
        roots = [os.environ.get("GAL_DATA"), "data", Path(__file__).resolve().parents[2] / "data"]
    for root in roots:
        if root:
            candidates += [Path(root) / name, Path(root) / name.lower(), Path(root) / f"{name.lower()}.content"]
    for c in candidates:
        if c.is_file() or (c.is_dir() and ((c / "edges.tsv").is_file() or any(c.glob("*.content")))):
            return c
    return None
