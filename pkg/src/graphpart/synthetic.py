"""Planted-cluster attributed graphs for tests and desk-scale runs."""

from __future__ import annotations

import numpy as np

from .graph import AttributedGraph


def planted_partition(n: int = 200, clusters: int = 4, p_in: float = 0.1, p_out: float = 0.005,
                      d: int = 16, separation: float = 2.0, noise: float = 1.0, seed: int = 0,
                      binary: bool = False, name: str = "planted") -> AttributedGraph:
    """Stochastic block model whose blocks are also the labels.

    Features are Gaussian around a per-cluster mean drawn at ``separation``
    scale; with ``binary`` they are thresholded into sparse 0/1 bag-of-words
    style vectors instead.
    """
    rng = np.random.default_rng(seed)
    labels = np.sort(rng.integers(clusters, size=n))
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    edges = np.argwhere(upper)
    means = rng.normal(scale=separation, size=(clusters, d))
    feats = means[labels] + rng.normal(scale=noise, size=(n, d))
    if binary:
        feats = (feats > np.quantile(feats, 0.9)).astype(np.float64)
    return AttributedGraph.from_edges(n, edges, feats, labels, clusters, name=name)
