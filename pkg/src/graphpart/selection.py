"""One-shot query strategies.

Every strategy returns exactly ``budget`` distinct node ids, disjoint from
the seed set, and is a deterministic function of its inputs and seed. All
ties are broken by the smaller node id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .gcn import GcnModel, TrainConfig, first_hop, gcn_train, softmax
from .graph import AttributedGraph, aggregate_features, normalized_adjacency
from .kmeans import kmeans, nearest_unused
from .partition import Partition

STRATEGIES = ("random", "degree", "pagerank", "density", "uncertainty", "coreset", "age",
              "featprop", "graphpart", "graphpartfar")
MODEL_BASED = ("density", "uncertainty", "coreset", "age")
REPRESENTATIONS = ("aggregation", "embedding", "feature")

AGE_GAMMA = {"citeseer": 0.3, "cora": 0.7, "pubmed": 0.9}
AGE_GAMMA_DEFAULT = 0.8


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _top(scores: np.ndarray, candidates: np.ndarray, count: int) -> list[int]:
    """``count`` candidates with the largest scores; smaller id first on ties."""
    candidates = np.asarray(candidates)
    order = np.lexsort((candidates, -scores[candidates]))
    return [int(i) for i in candidates[order[:count]]]


def _complement(n: int, excluded) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(list(excluded), dtype=np.int64)] = False
    return np.flatnonzero(mask)


@dataclass(frozen=True)
class BudgetPlan:
    budget: int
    per_part: dict[int, int]
    order: tuple[int, ...]  # processing order: decreasing size, then id


@dataclass(frozen=True)
class SelectionResult:
    """``selected`` holds every queried node in query order; for the
    model-based protocol the random initial share comes first."""

    selected: list[int]
    strategy: str
    budget: int
    seed: int | None = None
    representation: str = "aggregation"
    seed_set: list[int] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def train_set(self) -> list[int]:
        return list(self.seed_set) + list(self.selected)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.writelines(f"{i}\n" for i in self.selected)


def load_selected(path) -> list[int]:
    with open(path) as fh:
        return [int(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# coverage objective


def objective_eval(features, partition: Partition, s_tr, return_uncovered: bool = False):
    """Sum over all nodes of the distance to the nearest training node in
    the same part.

    Nodes of a part holding no training node fall back to the nearest
    training node anywhere; those parts are reported when
    ``return_uncovered`` is set.
    """
    features = np.asarray(features, dtype=np.float64)
    s_tr = np.unique(np.asarray(list(s_tr), dtype=np.int64))
    if s_tr.size == 0:
        raise ValueError("objective needs at least one training node")
    total = 0.0
    uncovered = []
    for k in range(partition.k):
        members = partition.members(k)
        local = np.intersect1d(s_tr, members)
        if local.size == 0:
            uncovered.append(k)
            local = s_tr
        total += float(_chunked_min(features[members], features[local]).sum())
    return (total, uncovered) if return_uncovered else total


def _chunked_min(a: np.ndarray, b: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Distance from each row of ``a`` to its nearest row of ``b``."""
    out = np.empty(len(a))
    for start in range(0, len(a), chunk):
        out[start:start + chunk] = cdist(a[start:start + chunk], b).min(axis=1)
    return out


# ---------------------------------------------------------------------------
# partition-based strategies


def budget_plan(partition: Partition, budget: int, seed_set=()) -> BudgetPlan:
    """Split ``budget`` across parts: b // K each, the remainder one unit at a
    time to the largest parts, and any excess over a part's free nodes
    handed on to the next-largest parts with room."""
    seed_set = set(int(i) for i in seed_set)
    free = {k: sum(1 for i in partition.members(k) if int(i) not in seed_set) for k in range(partition.k)}
    if budget > sum(free.values()):
        raise ValueError(f"budget {budget} exceeds the {sum(free.values())} available nodes")
    sizes = partition.sizes()
    order = tuple(sorted(range(partition.k), key=lambda k: (-sizes[k], k)))
    alloc = {k: budget // partition.k for k in order}
    for k in order[: budget % partition.k]:
        alloc[k] += 1
    excess = 0
    for k in order:
        if alloc[k] > free[k]:
            excess += alloc[k] - free[k]
            alloc[k] = free[k]
    while excess:
        for k in order:
            if excess and alloc[k] < free[k]:
                alloc[k] += 1
                excess -= 1
    return BudgetPlan(budget, alloc, order)


def _partition_select(features, partition: Partition, budget: int, seed_set, rng, far: bool,
                      penalty_scope: str = "all") -> tuple[list[int], BudgetPlan]:
    features = np.asarray(features, dtype=np.float64)
    rng = _rng(rng)
    plan = budget_plan(partition, budget, seed_set)
    chosen = set(int(i) for i in seed_set)
    selected: list[int] = []
    for k in plan.order:
        b_k = plan.per_part[k]
        if b_k == 0:
            continue
        cand = np.array([i for i in partition.members(k) if int(i) not in chosen], dtype=np.int64)
        x = features[cand]
        centers, _ = kmeans(x, b_k, rng)
        if not far:
            picks = [int(cand[j]) for j in nearest_unused(x, centers)]
        else:
            ref = sorted(chosen) if penalty_scope == "all" else sorted(set(seed_set) | set(selected))
            # distance to the closest already-selected node; no penalty while none exists
            mind = _chunked_min(x, features[ref]) if ref else np.full(len(cand), np.inf)
            taken = np.zeros(len(cand), dtype=bool)
            picks = []
            for center in centers:
                score = np.linalg.norm(x - center, axis=1) - np.where(np.isinf(mind), 0.0, mind)
                score[taken] = np.inf
                j = int(np.argmin(score))
                taken[j] = True
                picks.append(int(cand[j]))
                if penalty_scope == "all":
                    mind = np.minimum(mind, np.linalg.norm(x - x[j], axis=1))
        selected.extend(picks)
        chosen.update(picks)
    return selected, plan


def graphpart_select(features, partition: Partition, budget: int, seed_set=(), rng=0,
                     representation: str = "aggregation") -> SelectionResult:
    """Per-part approximate K-Medoids: K-Means++/Lloyd in each part, then the
    free node nearest each center."""
    selected, plan = _partition_select(features, partition, budget, seed_set, rng, far=False)
    return SelectionResult(selected, "graphpart", budget, _seed_of(rng), representation,
                           sorted(int(i) for i in seed_set), {"k": partition.k, "plan": plan.per_part})


def graphpartfar_select(features, partition: Partition, budget: int, seed_set=(), rng=0,
                        representation: str = "aggregation", penalty_scope: str = "all") -> SelectionResult:
    """GraphPart where each center's pick minimizes distance-to-center minus
    the distance to the closest node selected so far.

    ``penalty_scope="previous"`` only penalizes picks made in earlier parts.
    """
    if penalty_scope not in ("all", "previous"):
        raise ValueError("penalty_scope must be 'all' or 'previous'")
    selected, plan = _partition_select(features, partition, budget, seed_set, rng, far=True,
                                       penalty_scope=penalty_scope)
    return SelectionResult(selected, "graphpartfar", budget, _seed_of(rng), representation,
                           sorted(int(i) for i in seed_set), {"k": partition.k, "plan": plan.per_part})


def single_partition(n: int) -> Partition:
    return Partition(np.zeros(n, dtype=np.int64), 1, 0.0)


def featprop_select(features, budget: int, rng=0, seed_set=(), representation: str = "aggregation") -> SelectionResult:
    """K-Means over all nodes with ``budget`` centers, nearest node per center."""
    features = np.asarray(features)
    if budget > len(features) - len(set(seed_set)):
        raise ValueError(f"budget {budget} exceeds available nodes")
    result = graphpart_select(features, single_partition(len(features)), budget, seed_set, rng, representation)
    return SelectionResult(result.selected, "featprop", budget, result.seed, representation, result.seed_set)


def _seed_of(rng):
    return rng if isinstance(rng, (int, np.integer)) else None


# ---------------------------------------------------------------------------
# structure-only baselines


def random_select(n: int, budget: int, seed_set=(), rng=0) -> SelectionResult:
    pool = _complement(n, seed_set)
    if budget > len(pool):
        raise ValueError(f"budget {budget} exceeds the {len(pool)} available nodes")
    picks = _rng(rng).choice(pool, size=budget, replace=False)
    return SelectionResult([int(i) for i in picks], "random", budget, _seed_of(rng),
                           seed_set=sorted(int(i) for i in seed_set))


def degree_select(g: AttributedGraph, budget: int) -> SelectionResult:
    if budget > g.n:
        raise ValueError("budget exceeds node count")
    return SelectionResult(_top(g.degrees.astype(np.float64), np.arange(g.n), budget), "degree", budget)


def pagerank(g: AttributedGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """PageRank by power iteration; dangling mass is spread uniformly."""
    n = g.n
    deg = g.degrees.astype(np.float64)
    inv_deg = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
    transition_t = g.adjacency().T.tocsr()  # symmetric, kept explicit
    dangling = deg == 0
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = damping * (transition_t @ (x * inv_deg)) + (damping * x[dangling].sum() + 1.0 - damping) / n
        if np.abs(new - x).sum() < tol:
            return new
        x = new
    return x


def pagerank_select(g: AttributedGraph, budget: int, scores: np.ndarray | None = None) -> SelectionResult:
    if budget > g.n:
        raise ValueError("budget exceeds node count")
    scores = pagerank(g) if scores is None else scores
    return SelectionResult(_top(scores, np.arange(g.n), budget), "pagerank", budget)


# ---------------------------------------------------------------------------
# model-based baselines (operate after an initial model on the seed set)


def kcenter_greedy_select(reps, budget: int, seed_set=(), rng=0) -> SelectionResult:
    """Greedy K-Center: repeatedly add the node farthest from the current
    set until ``budget`` new nodes are chosen. With an empty seed set the
    first node is drawn at random."""
    reps = np.asarray(reps, dtype=np.float64)
    n = len(reps)
    seed_set = [int(i) for i in seed_set]
    if budget > n - len(set(seed_set)):
        raise ValueError("budget exceeds available nodes")
    picks: list[int] = []
    if seed_set:
        mind = _chunked_min(reps, reps[seed_set])
    else:
        first = int(_rng(rng).integers(n))
        picks.append(first)
        mind = np.linalg.norm(reps - reps[first], axis=1)
    mind[seed_set] = -np.inf
    if picks:
        mind[picks] = -np.inf
    while len(picks) < budget:
        j = int(np.argmax(mind))
        picks.append(j)
        mind = np.minimum(mind, np.linalg.norm(reps - reps[j], axis=1))
        mind[j] = -np.inf
    return SelectionResult(picks, "coreset", budget, _seed_of(rng), seed_set=sorted(seed_set))


def density_scores(reps, num_clusters: int, rng=0) -> np.ndarray:
    """1 / (1 + distance to the node's K-Means center)."""
    reps = np.asarray(reps, dtype=np.float64)
    centers, labels = kmeans(reps, min(num_clusters, len(reps)), _rng(rng))
    return 1.0 / (1.0 + np.linalg.norm(reps - centers[labels], axis=1))


def entropy_scores(logits) -> np.ndarray:
    p = softmax(np.asarray(logits, dtype=np.float64))
    logp = np.log(np.where(p > 0, p, 1.0))
    return -(p * logp).sum(axis=1)


def density_select(reps, budget: int, seed_set, num_clusters: int, rng=0) -> SelectionResult:
    scores = density_scores(reps, num_clusters, rng)
    picks = _top(scores, _complement(len(scores), seed_set), budget)
    return SelectionResult(picks, "density", budget, _seed_of(rng), seed_set=sorted(int(i) for i in seed_set))


def uncertainty_select(logits, budget: int, seed_set=()) -> SelectionResult:
    scores = entropy_scores(logits)
    picks = _top(scores, _complement(len(scores), seed_set), budget)
    return SelectionResult(picks, "uncertainty", budget, seed_set=sorted(int(i) for i in seed_set))


def percentiles(values: np.ndarray) -> np.ndarray:
    """Fraction of entries strictly below each entry."""
    return (rankdata(values, method="min") - 1.0) / len(values)


def age_scores(centrality, density, entropy, gamma: float) -> np.ndarray:
    """gamma * pct(centrality) + (1 - gamma)/2 * (pct(density) + pct(entropy))."""
    w = (1.0 - gamma) / 2.0
    return gamma * percentiles(centrality) + w * percentiles(density) + w * percentiles(entropy)


def age_select(centrality, reps, logits, budget: int, seed_set, gamma: float, num_clusters: int,
               rng=0) -> SelectionResult:
    """Fixed-weight one-shot AGE; percentiles are taken over the candidates."""
    n = len(centrality)
    cand = _complement(n, seed_set)
    dens = density_scores(reps, num_clusters, rng)
    ent = entropy_scores(logits)
    scores = np.full(n, -np.inf)
    scores[cand] = age_scores(np.asarray(centrality)[cand], dens[cand], ent[cand], gamma)
    picks = _top(scores, cand, budget)
    return SelectionResult(picks, "age", budget, _seed_of(rng), seed_set=sorted(int(i) for i in seed_set),
                           info={"gamma": gamma})


def default_gamma(dataset: str) -> float:
    return AGE_GAMMA.get(dataset.lower(), AGE_GAMMA_DEFAULT)


# ---------------------------------------------------------------------------
# dispatcher


@dataclass
class GraphContext:
    """Per-dataset quantities shared by every strategy run."""

    graph: AttributedGraph
    s: sp.csr_matrix
    x: np.ndarray
    sx: np.ndarray | sp.csr_matrix  # S @ X, CSR when sparse
    aggregated: np.ndarray
    partition: Partition | None = None
    _pagerank: np.ndarray | None = None

    @classmethod
    def build(cls, g: AttributedGraph, x=None, partition: Partition | None = None, hops: int = 2):
        x = g.features if x is None else np.asarray(x, dtype=np.float64)
        s = normalized_adjacency(g)
        sx = aggregate_features(s, x, 1)
        agg = aggregate_features(s, sx, hops - 1) if hops >= 1 else x
        return cls(g, s, x, first_hop(s, x), agg, partition)

    @property
    def pagerank(self) -> np.ndarray:
        if self._pagerank is None:
            self._pagerank = pagerank(self.graph)
        return self._pagerank

    def train(self, train_ids, cfg: TrainConfig, seed: int) -> GcnModel:
        g = self.graph
        return gcn_train(self.s, self.x, train_ids, g.labels, g.class_count, cfg, seed, sx=self.sx)


def initial_size(budget: int) -> int:
    """Random-initialization share for model-based strategies."""
    return max(1, budget // 3)


def select_nodes(ctx: GraphContext, strategy: str, budget: int, seed: int = 0,
                 representation: str = "aggregation", gamma: float | None = None,
                 cfg: TrainConfig = TrainConfig(), penalty_scope: str = "all") -> SelectionResult:
    """Run ``strategy`` with the one-shot protocol.

    Model-based strategies and the embedding representation first label a
    random third of the budget, train a GCN on it, and choose the rest.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if representation not in REPRESENTATIONS:
        raise ValueError(f"unknown representation {representation!r}")
    g = ctx.graph
    if budget > g.n:
        raise ValueError(f"budget {budget} exceeds node count {g.n}")
    rng = np.random.default_rng(seed)

    needs_model = strategy in MODEL_BASED or (
        representation == "embedding" and strategy in ("featprop", "graphpart", "graphpartfar"))
    # nodes labeled before the strategy proper runs (the random initial share)
    seed_set: list[int] = []
    model = None
    if needs_model:
        seed_set = random_select(g.n, initial_size(budget), (), rng).selected
        model = ctx.train(seed_set, cfg, seed)
    rest = budget - len(seed_set)

    if strategy == "random":
        result = random_select(g.n, budget, (), rng)
    elif strategy == "degree":
        result = degree_select(g, budget)
    elif strategy == "pagerank":
        result = pagerank_select(g, budget, ctx.pagerank)
    elif strategy in MODEL_BASED:
        reps = model.embed(ctx.s, ctx.x, ctx.sx)
        if strategy == "coreset":
            result = kcenter_greedy_select(reps, rest, seed_set, rng)
        elif strategy == "density":
            result = density_select(reps, rest, seed_set, g.class_count, rng)
        else:
            logits = model.forward(ctx.s, ctx.x, ctx.sx)
            if strategy == "uncertainty":
                result = uncertainty_select(logits, rest, seed_set)
            else:
                gamma = default_gamma(g.name) if gamma is None else gamma
                result = age_select(ctx.pagerank, reps, logits, rest, seed_set, gamma, g.class_count, rng)
    else:
        if representation == "aggregation":
            feats = ctx.aggregated
        elif representation == "feature":
            feats = ctx.x
        else:
            feats = model.embed(ctx.s, ctx.x, ctx.sx)
        if strategy == "featprop":
            result = featprop_select(feats, rest, rng, seed_set, representation)
        else:
            if ctx.partition is None:
                raise ValueError("partition-based strategies need a partition")
            if strategy == "graphpart":
                result = graphpart_select(feats, ctx.partition, rest, seed_set, rng, representation)
            else:
                result = graphpartfar_select(feats, ctx.partition, rest, seed_set, rng, representation,
                                             penalty_scope)

    info = dict(result.info, initial=len(seed_set))
    return SelectionResult(seed_set + result.selected, strategy, budget, seed, representation, [], info)
