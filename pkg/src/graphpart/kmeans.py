"""Lloyd K-Means with K-Means++ seeding, and the nearest-node medoid picks built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class KMeansConfig:
    max_iter: int = 300
    tol: float = 1e-6


def sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (len(x), len(centers))."""
    d = (x * x).sum(1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def cluster_sums(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Per-cluster sums of the rows of ``x`` (k x d)."""
    onehot = sp.csr_matrix((np.ones(len(labels)), (labels, np.arange(len(labels)))), shape=(k, len(labels)))
    return np.asarray(onehot @ x)


def kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = sq_dists(x, centers[:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point coincides with a chosen center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[i] = x[idx]
        closest = np.minimum(closest, sq_dists(x, centers[i:i + 1])[:, 0])
    return centers


def kmeans(x, k: int, rng: np.random.Generator, config: KMeansConfig = KMeansConfig()):
    """Return (centers, labels). Empty clusters are re-seeded at the point
    farthest from the current centers."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    centers = kmeans_pp_init(x, k, rng)
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(config.max_iter):
        labels = sq_dists(x, centers).argmin(axis=1)
        counts = np.bincount(labels, minlength=k)
        new = cluster_sums(x, labels, k)
        filled = counts > 0
        new[filled] /= counts[filled, None]
        for c in np.flatnonzero(~filled):
            far = int(np.argmax(sq_dists(x, new[filled]).min(axis=1)))
            new[c] = x[far]
            filled[c] = True
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < config.tol:
            break
    labels = sq_dists(x, centers).argmin(axis=1)
    return centers, labels


def nearest_unused(x: np.ndarray, centers: np.ndarray, taken: np.ndarray | None = None) -> list[int]:
    """For each center in order, the row index of the closest not-yet-taken
    point (lowest index on ties)."""
    taken = np.zeros(len(x), dtype=bool) if taken is None else taken.copy()
    picks = []
    for center in centers:
        dist = np.linalg.norm(x - center, axis=1)
        dist[taken] = np.inf
        idx = int(np.argmin(dist))
        picks.append(idx)
        taken[idx] = True
    return picks
