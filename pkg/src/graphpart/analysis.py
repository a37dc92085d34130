"""Diagnostics: per-node coverage bound quantities and accuracy disparity."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .gcn import MlpHead
from .partition import Partition


class LemmaViolation(AssertionError):
    pass


def spectral_norm(w: np.ndarray, iters: int = 100, seed: int = 0) -> float:
    """Largest singular value by power iteration on W^T W (a lower estimate)."""
    v = np.random.default_rng(seed).normal(size=w.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = w @ v
        sigma = np.linalg.norm(u)
        if sigma == 0.0:
            return 0.0
        v = w.T @ u
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(w @ v))


def lipschitz_bound(weights) -> float:
    """Product of exact spectral norms: an upper bound on the l2->l2 (and
    hence l2->linf) Lipschitz constant of a ReLU MLP."""
    bound = 1.0
    for w in weights:
        bound *= float(np.linalg.norm(w, 2))
    return bound


def nearest_in_partition(features, partition: Partition, s_tr):
    """For every node: nearest training node in its own part and the
    distance to it; ``-1`` / ``nan`` where the part has no training node."""
    features = np.asarray(features, dtype=np.float64)
    n = len(features)
    s_tr = np.unique(np.asarray(list(s_tr), dtype=np.int64))
    tau = np.full(n, -1, dtype=np.int64)
    eps = np.full(n, np.nan)
    for k in range(partition.k):
        members = partition.members(k)
        local = np.intersect1d(s_tr, members)
        if local.size == 0:
            continue
        d = cdist(features[members], features[local])
        j = d.argmin(axis=1)
        tau[members] = local[j]
        eps[members] = d[np.arange(len(members)), j]
    return tau, eps


@dataclass(frozen=True)
class BoundDiagnostics:
    nodes: np.ndarray
    tau: np.ndarray
    epsilon: np.ndarray
    gamma: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    covered: np.ndarray
    delta_h: float

    @property
    def violations(self) -> int:
        c = self.covered
        return int(np.sum(self.lhs[c] > self.rhs[c] + 1e-9))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "tau", "epsilon", "gamma", "lhs", "rhs", "covered"])
            for row in zip(self.nodes, self.tau, self.epsilon, self.gamma, self.lhs, self.rhs, self.covered):
                node, tau, eps, gam, lhs, rhs, cov = row
                w.writerow([int(node), int(tau), repr(float(eps)), repr(float(gam)), repr(float(lhs)),
                            repr(float(rhs)), int(bool(cov))])


def bound_diagnostics(head: MlpHead, features, partition: Partition, s_tr, check: bool = True) -> BoundDiagnostics:
    """Per test node: nearest same-part training node tau, epsilon, the
    margin gamma = 2 * delta_h * epsilon, and both sides of
    ||h(g_i) - h(g_tau)||_inf <= delta_h * epsilon.

    Nodes in parts without a training node are reported as uncovered and
    excluded from the check. Raises ``LemmaViolation`` if ``check`` and any
    covered node breaks the inequality.
    """
    features = np.asarray(features, dtype=np.float64)
    n = len(features)
    s_tr = np.unique(np.asarray(list(s_tr), dtype=np.int64))
    test = np.setdiff1d(np.arange(n), s_tr)
    tau_all, eps_all = nearest_in_partition(features, partition, s_tr)
    tau, eps = tau_all[test], eps_all[test]
    covered = tau >= 0
    delta_h = lipschitz_bound(head.weights)
    out = head(features)
    lhs = np.full(len(test), np.nan)
    lhs[covered] = np.abs(out[test[covered]] - out[tau[covered]]).max(axis=1)
    rhs = delta_h * eps
    diag = BoundDiagnostics(test, tau, eps, 2.0 * delta_h * eps, lhs, rhs, covered, delta_h)
    if check and diag.violations:
        raise LemmaViolation(f"{diag.violations} node(s) violate the Lipschitz coverage bound")
    return diag


def gcn_output_ratio(logits, features, partition: Partition, s_tr) -> float:
    """Largest observed ||f_i - f_tau||_inf / epsilon_i over covered test
    nodes; an empirical stand-in for the GCN smoothness constant."""
    logits = np.asarray(logits)
    s_tr = np.unique(np.asarray(list(s_tr), dtype=np.int64))
    tau, eps = nearest_in_partition(features, partition, s_tr)
    test = np.setdiff1d(np.arange(len(logits)), s_tr)
    ok = test[(tau[test] >= 0) & (eps[test] > 0)]
    if ok.size == 0:
        return float("nan")
    ratio = np.abs(logits[ok] - logits[tau[ok]]).max(axis=1) / eps[ok]
    return float(ratio.max())


@dataclass(frozen=True)
class DisparityBin:
    index: int
    lo: float
    hi: float
    count: int
    accuracy: float


def disparity_analysis(pred, truth, features, s_tr, bins: int = 10) -> list[DisparityBin]:
    """Test nodes ordered by aggregated-feature distance to the nearest
    training node, split into ``bins`` equal-count groups (sizes differ by
    at most one), with the accuracy of each group."""
    features = np.asarray(features, dtype=np.float64)
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    s_tr = np.unique(np.asarray(list(s_tr), dtype=np.int64))
    test = np.setdiff1d(np.arange(len(features)), s_tr)
    if bins < 1:
        raise ValueError("bins must be positive")
    if len(test) < bins:
        raise ValueError(f"{len(test)} test nodes cannot fill {bins} bins")
    dist = cdist(features[test], features[s_tr]).min(axis=1)
    order = np.lexsort((test, dist))
    out = []
    for i, group in enumerate(np.array_split(order, bins)):
        nodes = test[group]
        out.append(DisparityBin(i, float(dist[group].min()), float(dist[group].max()), len(group),
                                float(np.mean(pred[nodes] == truth[nodes]))))
    return out


def accuracy_spread(table) -> float:
    acc = [b.accuracy for b in table]
    return max(acc) - min(acc)


def write_disparity_csv(table, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_index", "bin_lo_dist", "bin_hi_dist", "count", "accuracy"])
        for b in table:
            w.writerow([b.index, repr(b.lo), repr(b.hi), b.count, repr(b.accuracy)])
