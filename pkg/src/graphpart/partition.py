"""Graph partitioning by greedy modularity maximization.

Clauset-Newman-Moore merges run until no merge increases modularity; the
remaining communities are merged agglomeratively (smallest community into
its nearest feature centroid) so the dendrogram always reaches one
community. The number of parts is chosen at the elbow of a dispersion curve.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import AttributedGraph
from .kmeans import cluster_sums

logger = logging.getLogger(__name__)

# CNM gains are compared after rounding so that mathematically equal gains
# reached through different float paths tie and fall back to the id order.
_GAIN_DECIMALS = 12


@dataclass(frozen=True)
class Partition:
    assignment: np.ndarray
    k: int
    modularity: float

    def members(self, part: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == part)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def to_json(self) -> dict:
        return {"k": int(self.k), "modularity": float(self.modularity),
                "assignment": [int(p) for p in self.assignment]}

    @classmethod
    def from_json(cls, obj: dict) -> "Partition":
        assignment = np.asarray(obj["assignment"], dtype=np.int64)
        return cls(assignment, int(obj["k"]), float(obj["modularity"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path) -> "Partition":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class MergeRecord:
    kept: int        # surviving community id (smaller of the two)
    absorbed: int
    q_after: float
    fallback: bool


@dataclass(frozen=True)
class MergeDendrogram:
    n: int
    q_initial: float
    merges: tuple[MergeRecord, ...]

    def q_at(self, k: int) -> float:
        """Modularity when exactly ``k`` communities remain."""
        steps = self.n - k
        return self.q_initial if steps == 0 else self.merges[steps - 1].q_after

    def peak_k(self) -> int:
        """Community count at the modularity peak (fewest communities on ties)."""
        qs = np.array([self.q_at(k) for k in range(1, self.n + 1)])
        return int(np.flatnonzero(qs == qs.max())[0]) + 1

    @property
    def cnm_stop_k(self) -> int:
        """Community count at which greedy modularity merging stopped."""
        cnm_steps = sum(1 for r in self.merges if not r.fallback)
        return self.n - cnm_steps

    def sizes_at(self, k: int) -> np.ndarray:
        return np.bincount(partition_at_k(self, k).assignment, minlength=k)


def modularity_score(g: AttributedGraph, assignment) -> float:
    """Newman modularity of a hard assignment on an unweighted graph."""
    m = g.num_edges
    if m == 0:
        raise ValueError("modularity undefined on a graph without edges")
    assignment = np.asarray(assignment)
    if assignment.shape != (g.n,):
        raise ValueError("assignment must cover every node")
    _, labels = np.unique(assignment, return_inverse=True)
    edges = g.edge_list()
    intra = labels[edges[:, 0]] == labels[edges[:, 1]]
    e_c = np.bincount(labels[edges[intra, 0]], minlength=labels.max() + 1)
    d_c = np.bincount(labels, weights=g.degrees, minlength=labels.max() + 1)
    return float(np.sum(e_c / m - (d_c / (2.0 * m)) ** 2))


def _nearest_centroid(target: int, sums: dict, counts: dict) -> int:
    c = sums[target] / counts[target]
    best, best_dist = -1, np.inf
    for other in sorted(sums):
        if other == target:
            continue
        dist = float(np.linalg.norm(sums[other] / counts[other] - c))
        if dist < best_dist:
            best, best_dist = other, dist
    return best


def agglomerative_fallback(sizes: dict, sums: dict, counts: dict | None = None) -> tuple[int, int]:
    """Pick the next fallback merge.

    ``sizes`` maps community id to node count and ``sums`` maps it to the sum
    of member feature vectors. Returns ``(smallest, target)``: the smallest
    community (lowest id on ties) and the community whose centroid is
    nearest to it in L2 (lowest id on ties).
    """
    if len(sizes) < 2:
        raise ValueError("fallback needs at least two communities")
    counts = sizes if counts is None else counts
    smallest = min(sizes, key=lambda c: (sizes[c], c))
    return smallest, _nearest_centroid(smallest, sums, counts)


def cnm_dendrogram(g: AttributedGraph, features=None) -> MergeDendrogram:
    """Full merge history from singletons to one community.

    ``features`` (n x d) drive the fallback merges; without them every
    centroid coincides and the fallback merges into the lowest id.
    """
    n, m = g.n, g.num_edges
    if m == 0:
        raise ValueError("greedy modularity needs at least one edge")
    if features is None:
        features = np.zeros((n, 1))
    features = np.asarray(features, dtype=np.float64)

    a = {i: g.degrees[i] / (2.0 * m) for i in range(n)}
    q = -sum(v * v for v in a.values())
    q_initial = q
    dq: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    heap = []
    for u, v in g.edge_list():
        u, v = int(u), int(v)
        gain = 1.0 / m - 2.0 * a[u] * a[v]
        dq[u][v] = dq[v][u] = gain
        heap.append((-round(gain, _GAIN_DECIMALS), u, v, gain))
    heapq.heapify(heap)

    sizes = {i: 1 for i in range(n)}
    sums = {i: features[i].copy() for i in range(n)}
    merges: list[MergeRecord] = []

    def merge(lo: int, hi: int, fallback: bool) -> None:
        nonlocal q
        gain = dq[lo].get(hi, -2.0 * a[lo] * a[hi])
        q += gain
        row_lo, row_hi = dq.pop(lo), dq.pop(hi)
        row_lo.pop(hi, None)
        row_hi.pop(lo, None)
        new_row = {}
        for k in row_lo.keys() | row_hi.keys():
            if k in row_lo and k in row_hi:
                val = row_lo[k] + row_hi[k]
            elif k in row_hi:
                val = row_hi[k] - 2.0 * a[lo] * a[k]
            else:
                val = row_lo[k] - 2.0 * a[hi] * a[k]
            new_row[k] = val
            dq[k].pop(hi, None)
            dq[k][lo] = val
            heapq.heappush(heap, (-round(val, _GAIN_DECIMALS), min(lo, k), max(lo, k), val))
        dq[lo] = new_row
        a[lo] += a.pop(hi)
        sizes[lo] += sizes.pop(hi)
        sums[lo] = sums[lo] + sums.pop(hi)
        merges.append(MergeRecord(lo, hi, q, fallback))

    while heap:
        key, lo, hi, gain = heap[0]
        if lo not in dq or hi not in dq[lo] or dq[lo][hi] != gain:
            heapq.heappop(heap)
            continue
        if -key <= 0:
            break
        heapq.heappop(heap)
        merge(lo, hi, fallback=False)

    if len(sizes) > 1:
        logger.debug("CNM stopped at %d communities; falling back", len(sizes))
    while len(sizes) > 1:
        s, t = agglomerative_fallback(sizes, sums)
        merge(min(s, t), max(s, t), fallback=True)

    return MergeDendrogram(n, q_initial, tuple(merges))


def partition_at_k(dendro: MergeDendrogram, k: int, g: AttributedGraph | None = None) -> Partition:
    """Cut the dendrogram where exactly ``k`` communities remain.

    Part ids follow the order of each part's smallest node id. The recorded
    modularity is used unless ``g`` is passed, in which case it is recomputed.
    """
    n = dendro.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    parent = np.arange(n)
    for rec in dendro.merges[: n - k]:
        parent[rec.absorbed] = rec.kept

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    roots = np.array([root(i) for i in range(n)])
    # the surviving id is always the smallest member, so sorted roots give
    # the required relabeling order
    _, assignment = np.unique(roots, return_inverse=True)
    q = modularity_score(g, assignment) if g is not None else dendro.q_at(k)
    return Partition(assignment.astype(np.int64), k, q)


def dispersion(features: np.ndarray, assignment: np.ndarray) -> float:
    """Sum over nodes of the L2 distance to their part's centroid."""
    k = int(assignment.max()) + 1
    counts = np.bincount(assignment, minlength=k).astype(np.float64)
    sums = cluster_sums(features, assignment, k)
    centroids = sums / counts[:, None]
    return float(np.linalg.norm(features - centroids[assignment], axis=1).sum())


def cost_curve(dendro: MergeDendrogram, features, k_max: int | None = None) -> list[tuple[int, float]]:
    """(k, dispersion at the k-cut) for k = 1..k_max."""
    features = np.asarray(features, dtype=np.float64)
    if k_max is None:
        k_max = min(dendro.n, 100)
    if k_max > dendro.n:
        raise ValueError("k_max exceeds node count")
    return [(k, dispersion(features, partition_at_k(dendro, k).assignment))
            for k in range(1, k_max + 1)]


@dataclass(frozen=True)
class Elbow:
    k: int
    degenerate: bool


def find_elbow(curve) -> Elbow:
    """Elbow by rotation: tilt the min-max scaled curve so that its end chord
    is horizontal and take the lowest point.

    A curve with no point below the chord is flagged degenerate and the first
    interior point is returned.
    """
    pts = np.asarray(curve, dtype=np.float64)
    if pts.ndim != 2 or len(pts) < 3:
        raise ValueError("elbow needs at least three points")
    span = pts.max(axis=0) - pts.min(axis=0)
    scaled = (pts - pts.min(axis=0)) / np.where(span > 0, span, 1.0)
    theta = np.arctan2(scaled[-1, 1] - scaled[0, 1], scaled[-1, 0] - scaled[0, 0])
    co, si = np.cos(theta), np.sin(theta)
    rotated_y = -scaled[:, 0] * si + scaled[:, 1] * co
    baseline = rotated_y[0]
    interior = rotated_y[1:-1] - baseline
    if interior.min() >= -1e-12:
        logger.warning("elbow curve has no concavity; returning first interior point")
        return Elbow(int(pts[1, 0]), True)
    idx = int(np.argmin(interior)) + 1
    return Elbow(int(pts[idx, 0]), False)


def elbow_k(curve) -> int:
    return find_elbow(curve).k


def build_partition(g: AttributedGraph, features, k="auto", k_max: int | None = None):
    """Dendrogram plus the chosen cut. Returns (partition, dendrogram, curve)."""
    dendro = cnm_dendrogram(g, features)
    curve = None
    if k == "auto":
        curve = cost_curve(dendro, features, k_max if k_max is not None else min(g.n, 100))
        k = elbow_k(curve) if len(curve) >= 3 else len(curve)
    return partition_at_k(dendro, int(k), g), dendro, curve
